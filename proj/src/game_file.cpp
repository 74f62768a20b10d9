#include "swarm/game_file.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "swarm/errors.hpp"

namespace swarm {

using nlohmann::json;

namespace {

std::vector<std::string> split_subset_key(const std::string& key) {
  std::vector<std::string> parts;
  std::stringstream ss(key);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (!part.empty()) parts.push_back(part);
  }
  return parts;
}

CoalitionGame from_table(const json& j) {
  CoalitionGame game;
  game.model_kind = "table";
  if (!j.contains("members") || !j.at("members").is_array()) {
    throw ValidationError("game.members: required array of member names");
  }
  for (const json& m : j.at("members")) {
    if (!m.is_string() || m.get<std::string>().empty()) {
      throw ValidationError("game.members: names must be non-empty strings");
    }
    game.members.push_back(m.get<std::string>());
  }
  const int k = game.size();
  if (k < 1) throw ValidationError("game.members: at least one member");
  if (k > 20) throw ValidationError("game.members: table games support k <= 20");
  {
    auto sorted = game.members;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw ValidationError("game.members: duplicate member name");
    }
  }

  std::map<std::string, int> index;
  for (int i = 0; i < k; ++i) index[game.members[static_cast<std::size_t>(i)]] = i;

  const json& table = j.at("table");
  if (!table.is_object()) throw ValidationError("game.table: expected an object");
  std::vector<double> values(std::size_t{1} << k, 0.0);
  std::vector<bool> present(std::size_t{1} << k, false);
  for (auto it = table.begin(); it != table.end(); ++it) {
    std::uint64_t mask = 0;
    for (const std::string& name : split_subset_key(it.key())) {
      auto mi = index.find(name);
      if (mi == index.end()) {
        throw ValidationError("game.table: unknown member '" + name + "' in subset '" +
                              it.key() + "'");
      }
      mask |= std::uint64_t{1} << mi->second;
    }
    if (!it.value().is_number()) {
      throw ValidationError("game.table." + it.key() + ": quality must be a number");
    }
    values[mask] = it.value().get<double>();
    present[mask] = true;
  }
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << k); ++mask) {
    if (!present[mask]) {
      std::string key;
      for (int i = 0; i < k; ++i) {
        if (mask & (std::uint64_t{1} << i)) {
          if (!key.empty()) key += ",";
          key += game.members[static_cast<std::size_t>(i)];
        }
      }
      throw ValidationError("game.table: missing subset '" + key + "'");
    }
  }
  if (values[0] != 0.0) {
    throw ValidationError("game.table: empty coalition must have quality 0");
  }
  game.fn = [values](std::uint64_t mask) { return values[mask]; };
  return game;
}

std::vector<std::string> default_members(std::size_t k) {
  std::vector<std::string> members;
  for (std::size_t i = 0; i < k; ++i) members.push_back("n" + std::to_string(i + 1));
  return members;
}

}  // namespace

CoalitionGame parse_game_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("game parse error: ") + e.what());
  }
  if (j.contains("table")) return from_table(j);

  std::string model = j.value("model", "");
  CoalitionGame game;
  game.model_kind = model;
  if (model == "pipeline") {
    PipelineModel m;
    m.observed_quality = j.value("observed_quality", 0.0);
    if (!j.contains("time_shares") || !j.at("time_shares").is_array()) {
      throw ValidationError("game.time_shares: required array");
    }
    for (const json& v : j.at("time_shares")) m.time_shares.push_back(v.get<double>());
    m.validate();
    game.members = default_members(m.time_shares.size());
    game.fn = m.fn();
  } else if (model == "ensemble") {
    EnsembleModel m;
    m.observed_quality = j.value("observed_quality", 0.0);
    m.gamma = j.value("gamma", 0.5);
    if (!j.contains("accuracies") || !j.at("accuracies").is_array()) {
      throw ValidationError("game.accuracies: required array");
    }
    for (const json& v : j.at("accuracies")) m.accuracies.push_back(v.get<double>());
    m.validate();
    game.members = default_members(m.accuracies.size());
    game.fn = m.fn();
  } else if (model == "single") {
    SingleNodeModel m;
    m.observed_quality = j.value("observed_quality", 0.0);
    m.validate();
    game.members = default_members(1);
    game.fn = m.fn();
  } else {
    throw ValidationError(
        "game: expected a subset table or model one of pipeline/ensemble/single");
  }
  if (j.contains("members")) {
    if (!j.at("members").is_array() ||
        j.at("members").size() != game.members.size()) {
      throw ValidationError("game.members: must match the model's member count");
    }
    game.members.clear();
    for (const json& m : j.at("members")) game.members.push_back(m.get<std::string>());
  }
  return game;
}

CoalitionGame load_game_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read game file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_game_json(buf.str());
}

}  // namespace swarm
