#pragma once
#include <fstream>
#include <string>

#include "json.hpp"

#include "finmdp/mdp.hpp"
#include "finmdp/softmax.hpp"

namespace finmdp {

using ordered_json = nlohmann::ordered_json;

namespace detail {
inline std::string id_of(const ordered_json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  throw validation_error("identifiers must be strings or integers");
}

inline ordered_json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open file: " + path);
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw validation_error("malformed JSON in " + path + ": " + e.what());
  }
  return j;
}

inline void write_json_file(const std::string& path, const ordered_json& j) {
  std::ofstream out(path);
  if (!out) throw validation_error("cannot write file: " + path);
  out << j.dump(2) << "\n";
}
}  // namespace detail

/// Parses the model schema:
/// { "horizon": H, "epochs": [ { "states": [...], "actions": {state: [...]},
///   "rewards": {state: {action: num}}, "transitions": {state: {action:
///   {next_state: num}}} } ], "r_star": num }
/// Transitions are absent on the last epoch; omitted next-states carry
/// probability zero. The result is validated.
inline FiniteMdp model_from_json(const ordered_json& j) {
  FiniteMdp m;
  try {
    m.horizon = j.at("horizon").get<int>();
    m.r_star = j.at("r_star").get<double>();
    const auto& epochs = j.at("epochs");
    if (static_cast<int>(epochs.size()) != m.horizon)
      throw validation_error("epochs array length must equal horizon");
    m.state_ids.resize(m.horizon);
    m.action_ids.resize(m.horizon);
    m.reward.resize(m.horizon);
    if (m.horizon > 1) m.transition.resize(m.horizon - 1);
    for (int h = 0; h < m.horizon; ++h) {
      const auto& ep = epochs.at(h);
      for (const auto& sid : ep.at("states"))
        m.state_ids[h].push_back(detail::id_of(sid));
      const int ns = static_cast<int>(m.state_ids[h].size());
      m.action_ids[h].resize(ns);
      m.reward[h].resize(ns);
      const auto& actions = ep.at("actions");
      const auto& rewards = ep.at("rewards");
      for (int s = 0; s < ns; ++s) {
        const std::string& sid = m.state_ids[h][s];
        if (!actions.contains(sid))
          throw validation_error("missing action list for state \"" + sid +
                                 "\" at epoch " + std::to_string(h));
        for (const auto& aid : actions.at(sid))
          m.action_ids[h][s].push_back(detail::id_of(aid));
        const int na = static_cast<int>(m.action_ids[h][s].size());
        m.reward[h][s].assign(na, 0.0);
        for (int a = 0; a < na; ++a) {
          const std::string& aid = m.action_ids[h][s][a];
          if (!rewards.contains(sid) || !rewards.at(sid).contains(aid))
            throw validation_error("missing reward for (\"" + sid + "\", \"" + aid +
                                   "\") at epoch " + std::to_string(h));
          m.reward[h][s][a] = rewards.at(sid).at(aid).get<double>();
        }
      }
    }
    for (int h = 0; h + 1 < m.horizon; ++h) {
      const auto& ep = epochs.at(h);
      if (!ep.contains("transitions"))
        throw validation_error("missing transitions at epoch " + std::to_string(h));
      const auto& trans = ep.at("transitions");
      const int ns = static_cast<int>(m.state_ids[h].size());
      const int next = static_cast<int>(m.state_ids[h + 1].size());
      m.transition[h].resize(ns);
      for (int s = 0; s < ns; ++s) {
        const std::string& sid = m.state_ids[h][s];
        const int na = static_cast<int>(m.action_ids[h][s].size());
        m.transition[h][s].assign(na, std::vector<double>(next, 0.0));
        for (int a = 0; a < na; ++a) {
          const std::string& aid = m.action_ids[h][s][a];
          if (!trans.contains(sid) || !trans.at(sid).contains(aid))
            throw validation_error("missing transition row for (\"" + sid + "\", \"" +
                                   aid + "\") at epoch " + std::to_string(h));
          for (const auto& [tid, p] : trans.at(sid).at(aid).items()) {
            const int sp = m.state_index(h + 1, tid);
            if (sp < 0)
              throw validation_error("transition target \"" + tid +
                                     "\" not in epoch " + std::to_string(h + 1));
            m.transition[h][s][a][sp] = p.get<double>();
          }
        }
      }
    }
  } catch (const ordered_json::exception& e) {
    throw validation_error(std::string("malformed model JSON: ") + e.what());
  }
  validate(m);
  return m;
}

inline ordered_json model_to_json(const FiniteMdp& m) {
  ordered_json j;
  j["horizon"] = m.horizon;
  j["epochs"] = ordered_json::array();
  for (int h = 0; h < m.horizon; ++h) {
    ordered_json ep;
    ep["states"] = m.state_ids[h];
    ordered_json actions = ordered_json::object();
    ordered_json rewards = ordered_json::object();
    for (int s = 0; s < m.num_states(h); ++s) {
      const std::string& sid = m.state_ids[h][s];
      actions[sid] = m.action_ids[h][s];
      ordered_json rrow = ordered_json::object();
      for (int a = 0; a < m.num_actions(h, s); ++a)
        rrow[m.action_ids[h][s][a]] = m.reward[h][s][a];
      rewards[sid] = std::move(rrow);
    }
    ep["actions"] = std::move(actions);
    ep["rewards"] = std::move(rewards);
    if (h + 1 < m.horizon) {
      ordered_json trans = ordered_json::object();
      for (int s = 0; s < m.num_states(h); ++s) {
        ordered_json srow = ordered_json::object();
        for (int a = 0; a < m.num_actions(h, s); ++a) {
          ordered_json arow = ordered_json::object();
          const auto& row = m.transition[h][s][a];
          for (std::size_t sp = 0; sp < row.size(); ++sp)
            if (row[sp] != 0.0) arow[m.state_ids[h + 1][sp]] = row[sp];
          srow[m.action_ids[h][s][a]] = std::move(arow);
        }
        trans[m.state_ids[h][s]] = std::move(srow);
      }
      ep["transitions"] = std::move(trans);
    }
    j["epochs"].push_back(std::move(ep));
  }
  j["r_star"] = m.r_star;
  return j;
}

inline FiniteMdp load_model(const std::string& path) {
  return model_from_json(detail::load_json_file(path));
}

inline void save_model(const FiniteMdp& m, const std::string& path) {
  detail::write_json_file(path, model_to_json(m));
}

/// Parameter checkpoint schema: { "epochs": [ { state: { action: num } } ] }.
inline ordered_json checkpoint_to_json(const FiniteMdp& m, const ParamTensor& theta) {
  ordered_json j;
  j["epochs"] = ordered_json::array();
  for (int h = 0; h < m.horizon; ++h) {
    ordered_json ep = ordered_json::object();
    for (int s = 0; s < m.num_states(h); ++s) {
      ordered_json row = ordered_json::object();
      for (int a = 0; a < m.num_actions(h, s); ++a)
        row[m.action_ids[h][s][a]] = theta.value[h][s][a];
      ep[m.state_ids[h][s]] = std::move(row);
    }
    j["epochs"].push_back(std::move(ep));
  }
  return j;
}

inline ParamTensor checkpoint_from_json(const FiniteMdp& m, const ordered_json& j) {
  ParamTensor theta = ParamTensor::zeros(m);
  try {
    const auto& epochs = j.at("epochs");
    if (static_cast<int>(epochs.size()) != m.horizon)
      throw validation_error("checkpoint epoch count must equal horizon");
    for (int h = 0; h < m.horizon; ++h) {
      for (int s = 0; s < m.num_states(h); ++s) {
        const std::string& sid = m.state_ids[h][s];
        if (!epochs.at(h).contains(sid))
          throw validation_error("checkpoint missing state \"" + sid +
                                 "\" at epoch " + std::to_string(h));
        const auto& row = epochs.at(h).at(sid);
        for (int a = 0; a < m.num_actions(h, s); ++a) {
          const std::string& aid = m.action_ids[h][s][a];
          if (!row.contains(aid))
            throw validation_error("checkpoint missing action \"" + aid +
                                   "\" for state \"" + sid + "\"");
          const double v = row.at(aid).get<double>();
          if (!std::isfinite(v))
            throw validation_error("non-finite checkpoint entry at (\"" + sid +
                                   "\", \"" + aid + "\")");
          theta.value[h][s][a] = v;
        }
      }
    }
  } catch (const ordered_json::exception& e) {
    throw validation_error(std::string("malformed checkpoint JSON: ") + e.what());
  }
  return theta;
}

inline void save_checkpoint(const FiniteMdp& m, const ParamTensor& theta,
                            const std::string& path) {
  detail::write_json_file(path, checkpoint_to_json(m, theta));
}

inline ParamTensor load_checkpoint(const FiniteMdp& m, const std::string& path) {
  return checkpoint_from_json(m, detail::load_json_file(path));
}

}  // namespace finmdp
