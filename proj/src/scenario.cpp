#include "sbra/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/core.h>

namespace sbra {

namespace {

namespace pt = boost::property_tree;

[[noreturn]] void fail(std::string_view key, std::string_view what) {
  throw ScenarioError(fmt::format("{}: {}", key, what));
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto pos = s.find(sep, start);
    const auto end = pos == std::string_view::npos ? s.size() : pos;
    std::string item = trim(s.substr(start, end - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

double to_double(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) {
    fail(key, fmt::format("expected a number, got '{}'", t));
  }
  return v;
}

std::int64_t to_int(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) fail(key, fmt::format("expected an integer, got '{}'", t));
  return v;
}

std::uint64_t to_uint(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) fail(key, fmt::format("expected a seed, got '{}'", t));
  return v;
}

int to_small_int(std::string_view key, std::string_view text) {
  const std::int64_t v = to_int(key, text);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) fail(key, "out of range");
  return static_cast<int>(v);
}

bool to_bool(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1") return true;
  if (t == "false" || t == "0") return false;
  fail(key, fmt::format("expected true or false, got '{}'", t));
  return false;
}

// "tx>rx" or "id:tx>rx".
Link parse_link(std::string_view key, std::string_view item, int implicit_id) {
  std::string body(item);
  Link ln;
  ln.id = implicit_id;
  if (auto colon = body.find(':'); colon != std::string::npos) {
    ln.id = to_small_int(key, body.substr(0, colon));
    body = body.substr(colon + 1);
  }
  const auto gt = body.find('>');
  if (gt == std::string::npos) fail(key, fmt::format("link '{}' must look like tx>rx", item));
  ln.tx = to_small_int(key, body.substr(0, gt));
  ln.rx = to_small_int(key, body.substr(gt + 1));
  return ln;
}

void parse_topology(const pt::ptree& sec, ScenarioConfig& cfg) {
  bool have_nodes = false;
  for (const auto& [name, node] : sec) {
    const std::string key = "topology." + name;
    const std::string value = node.data();
    if (name == "nodes") {
      cfg.topology.node_count = to_small_int(key, value);
      have_nodes = true;
    } else if (name == "links") {
      int i = 0;
      for (const auto& item : split(value, ',')) cfg.topology.links.push_back(parse_link(key, item, i++));
    } else if (name == "neighbors") {
      for (const auto& item : split(value, ',')) {
        const auto dash = item.find('-');
        if (dash == std::string::npos) fail(key, fmt::format("neighbor pair '{}' must look like a-b", item));
        const NodeId a = to_small_int(key, item.substr(0, dash));
        const NodeId b = to_small_int(key, item.substr(dash + 1));
        // Undirected pair: record both directions.
        cfg.topology.neighbor_pairs.emplace_back(a, b);
        cfg.topology.neighbor_pairs.emplace_back(b, a);
      }
    } else if (name == "directed_neighbors") {
      for (const auto& item : split(value, ',')) {
        const auto gt = item.find('>');
        if (gt == std::string::npos) fail(key, fmt::format("entry '{}' must look like a>b", item));
        cfg.topology.neighbor_pairs.emplace_back(to_small_int(key, item.substr(0, gt)),
                                                 to_small_int(key, item.substr(gt + 1)));
      }
    } else if (name == "positions") {
      for (const auto& item : split(value, ';')) {
        const auto xy = split_ws(item);
        if (xy.size() != 2) fail(key, fmt::format("position '{}' must be 'x y'", item));
        cfg.topology.positions.push_back({to_double(key, xy[0]), to_double(key, xy[1])});
      }
    } else if (name == "radius") {
      cfg.topology.radius = to_double(key, value);
    } else {
      fail(key, "unknown key");
    }
  }
  if (!have_nodes) fail("topology.nodes", "missing required key");
  if (cfg.topology.radius && !cfg.topology.neighbor_pairs.empty()) {
    fail("topology.radius", "give either radius+positions or an explicit neighbor list, not both");
  }
}

void parse_sessions(const pt::ptree& sec, ScenarioConfig& cfg) {
  std::vector<Session> sessions;
  for (const auto& [name, node] : sec) {
    const std::string key = "sessions." + name;
    Session s;
    s.id = to_small_int(key, name);
    for (const auto& tok : split_ws(node.data())) s.path.push_back(to_small_int(key, tok));
    if (s.path.empty()) fail(key, "empty path");
    sessions.push_back(std::move(s));
  }
  std::sort(sessions.begin(), sessions.end(), [](const Session& a, const Session& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    if (sessions[i].id != static_cast<SessionId>(i)) {
      fail(fmt::format("sessions.{}", sessions[i].id), "session ids must be 0..S-1 without gaps");
    }
  }
  cfg.sessions = std::move(sessions);
}

void parse_channel(const pt::ptree& sec, ScenarioConfig& cfg) {
  for (const auto& [name, node] : sec) {
    const std::string key = "channel." + name;
    if (name == "scale") {
      cfg.channel_scale = to_double(key, node.data());
    } else if (name == "update_interval") {
      cfg.channel_update_interval = to_small_int(key, node.data());
    } else {
      fail(key, "unknown key");
    }
  }
}

void parse_run(const pt::ptree& sec, ScenarioConfig& cfg) {
  bool have_slots = false;
  for (const auto& [name, node] : sec) {
    const std::string key = "run." + name;
    const std::string value = node.data();
    if (name == "slots") {
      cfg.slots = to_int(key, value);
      have_slots = true;
    } else if (name == "warmup") {
      cfg.warmup = to_int(key, value);
    } else if (name == "rates" || name == "rate") {
      cfg.rates.clear();
      for (const auto& item : split(value, ',')) cfg.rates.push_back(to_double(key, item));
    } else if (name == "seeds" || name == "seed") {
      cfg.seeds.clear();
      for (const auto& item : split(value, ',')) cfg.seeds.push_back(to_uint(key, item));
    } else if (name == "slot_seconds") {
      cfg.slot_seconds = to_double(key, value);
    } else if (name == "output") {
      cfg.output = trim(value);
    } else if (name == "stability_ratio") {
      cfg.stability.growth_ratio = to_double(key, value);
    } else if (name == "stability_floor") {
      cfg.stability.floor = to_double(key, value);
    } else {
      fail(key, "unknown key");
    }
  }
  if (!have_slots) fail("run.slots", "missing required key");
}

PolicyEntry parse_policy(const std::string& label, const pt::ptree& sec) {
  PolicyEntry e;
  e.label = label;
  bool have_kind = false;
  const std::string prefix = "policy." + label + ".";
  for (const auto& [name, node] : sec) {
    const std::string key = prefix + name;
    const std::string value = trim(node.data());
    PolicyParams& p = e.policy.params;
    if (name == "kind") {
      auto kind = parse_policy_kind(value);
      if (!kind) fail(key, fmt::format("unknown policy kind '{}'", value));
      e.policy.kind = *kind;
      have_kind = true;
    } else if (name == "delta") {
      p.delta = to_double(key, value);
    } else if (name == "delta_per_rate") {
      e.delta_per_rate = to_double(key, value);
    } else if (name == "energy") {
      p.energy = to_double(key, value);
    } else if (name == "window") {
      p.window = to_small_int(key, value);
    } else if (name == "update_interval") {
      p.update_interval = to_small_int(key, value);
    } else if (name == "ema_lambda") {
      p.ema_lambda = to_double(key, value);
    } else if (name == "exclude_idle") {
      p.exclude_idle = to_bool(key, value);
    } else if (name == "static_weights") {
      for (const auto& item : split(value, ',')) p.static_weights.push_back(to_double(key, item));
    } else {
      fail(key, "unknown key");
    }
  }
  if (!have_kind) fail(prefix + "kind", "missing required key");
  return e;
}

void echo_tree(const pt::ptree& tree, const std::string& prefix,
               std::vector<std::pair<std::string, std::string>>& out) {
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      out.emplace_back(prefix + name, trim(node.data()));
    } else {
      echo_tree(node, prefix + name + ".", out);
    }
  }
}

}  // namespace

ScenarioConfig parse_scenario_text(std::string_view text) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& err) {
    throw ScenarioError(fmt::format("line {}: {}", err.line(), err.message()));
  }

  ScenarioConfig cfg;
  bool have_version = false;
  bool have_topology = false;
  bool have_run = false;
  std::set<std::string> labels;
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      if (name == "schema_version") {
        cfg.schema_version = to_small_int(name, node.data());
        if (cfg.schema_version != kSchemaVersion) {
          fail(name, fmt::format("unsupported version {} (expected {})", cfg.schema_version, kSchemaVersion));
        }
        have_version = true;
        continue;
      }
      // An empty section is harmless only for sessions (no traffic).
      if (name == "sessions") continue;
      fail(name, "unknown top-level key or empty section");
    }
    if (name == "topology") {
      parse_topology(node, cfg);
      have_topology = true;
    } else if (name == "sessions") {
      parse_sessions(node, cfg);
    } else if (name == "channel") {
      parse_channel(node, cfg);
    } else if (name == "run") {
      parse_run(node, cfg);
      have_run = true;
    } else if (name.rfind("policy.", 0) == 0 && name.size() > 7) {
      const std::string label = name.substr(7);
      if (!labels.insert(label).second) fail(name, "duplicate policy label");
      cfg.policies.push_back(parse_policy(label, node));
    } else {
      fail(name, "unknown section");
    }
  }
  if (!have_version) fail("schema_version", "missing required key");
  if (!have_topology) fail("topology", "missing required section");
  if (!have_run) fail("run", "missing required section");
  if (cfg.policies.empty()) fail("policy", "at least one [policy.<label>] section is required");
  std::sort(cfg.policies.begin(), cfg.policies.end(),
            [](const PolicyEntry& a, const PolicyEntry& b) { return a.label < b.label; });
  echo_tree(tree, "", cfg.echo);
  validate_scenario(cfg);
  return cfg;
}

ScenarioConfig parse_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(fmt::format("{}: cannot open scenario file", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str());
}

void validate_scenario(const ScenarioConfig& cfg) {
  if (cfg.slots < 0) fail("run.slots", "must be >= 0");
  const std::int64_t warmup = cfg.effective_warmup();
  if (warmup < 0) fail("run.warmup", "must be >= 0");
  if (cfg.slots > 0 && warmup >= cfg.slots) fail("run.warmup", "must be smaller than run.slots");
  for (double r : cfg.rates) {
    if (r < 0.0) fail("run.rates", fmt::format("rates must be >= 0, got {}", r));
  }
  if (cfg.seeds.empty()) fail("run.seeds", "at least one seed is required");
  if (!(cfg.slot_seconds > 0.0)) fail("run.slot_seconds", "must be > 0");
  if (cfg.channel_scale < 0.0) fail("channel.scale", "must be >= 0");
  if (cfg.channel_update_interval < 1) fail("channel.update_interval", "must be >= 1");
  if (!(cfg.stability.growth_ratio > 0.0)) fail("run.stability_ratio", "must be > 0");

  Network network = [&] {
    try {
      return build_network(cfg);
    } catch (const ScenarioError&) {
      throw;
    } catch (const std::exception& err) {
      fail("topology", err.what());
    }
  }();
  for (const PolicyEntry& e : cfg.policies) {
    const std::string prefix = "policy." + e.label;
    if (e.delta_per_rate && !(*e.delta_per_rate > 0.0)) fail(prefix + ".delta_per_rate", "must be > 0");
    Policy probe = e.policy;
    if (e.delta_per_rate) probe.params.delta = 1.0;
    try {
      validate_policy(probe, network);
    } catch (const std::exception& err) {
      fail(prefix, err.what());
    }
  }
}

Network build_network(const ScenarioConfig& cfg) {
  Topology topo = build_topology(cfg.topology);
  std::vector<Session> sessions = cfg.sessions;
  for (Session& s : sessions) {
    for (LinkId l : s.path) {
      if (l < 0 || l >= topo.link_count()) {
        throw ScenarioError(fmt::format("sessions.{}: unknown link {}", s.id, l));
      }
    }
    s.source = topo.link(s.path.front()).tx;
    s.destination = topo.link(s.path.back()).rx;
  }
  try {
    return Network(std::move(topo), std::move(sessions));
  } catch (const std::invalid_argument& err) {
    throw ScenarioError(fmt::format("sessions: {}", err.what()));
  }
}

const PolicyEntry& find_policy(const ScenarioConfig& cfg, std::string_view label) {
  for (const PolicyEntry& e : cfg.policies) {
    if (e.label == label) return e;
  }
  throw ScenarioError(fmt::format("policy.{}: no such policy in the scenario", label));
}

RunConfig make_run_config(const ScenarioConfig& cfg, const PolicyEntry& entry, double rate,
                          std::uint64_t seed, const Network& network) {
  RunConfig rc;
  rc.policy = entry.policy;
  if (entry.delta_per_rate) {
    if (!(rate > 0.0)) {
      fail("policy." + entry.label + ".delta_per_rate", "needs a positive arrival rate");
    }
    rc.policy.params.delta = *entry.delta_per_rate / (rc.policy.params.window * rate);
  }
  rc.arrival_rates.assign(static_cast<std::size_t>(network.session_count()), rate);
  rc.slots = cfg.slots;
  rc.warmup = cfg.effective_warmup();
  rc.seed = seed;
  rc.channel_scale = cfg.channel_scale;
  rc.channel_update_interval = cfg.channel_update_interval;
  rc.slot_seconds = cfg.slot_seconds;
  rc.stability = cfg.stability;
  return rc;
}

}  // namespace sbra
