#include "dpanther/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace dpanther {

using nlohmann::json;

namespace {

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd json_vector(const json& j, Eigen::Index expected) {
  const auto values = j.get<std::vector<double>>();
  if (expected >= 0 && static_cast<Eigen::Index>(values.size()) != expected) {
    throw std::runtime_error("expected " + std::to_string(expected) + " numbers, got " +
                             std::to_string(values.size()));
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  return out;
}

}  // namespace

std::string demonstration_to_json(const Demonstration& demo) {
  json j;
  j["observation"] = vector_json(demo.obs.flatten());
  j["actions"] = json::array();
  for (const auto& a : demo.actions) j["actions"].push_back(vector_json(a.flatten()));
  j["costs"] = demo.costs;
  return j.dump();
}

Demonstration demonstration_from_json(const std::string& line) {
  const json j = json::parse(line);
  Demonstration d;
  d.obs = Observation::unflatten(json_vector(j.at("observation"), Observation::kSize));
  for (const auto& a : j.at("actions")) {
    d.actions.push_back(ActionTuple::unflatten(json_vector(a, ActionTuple::kSize)));
  }
  d.costs = j.at("costs").get<std::vector<double>>();
  return d;
}

void write_dataset(const std::filesystem::path& path, std::span<const Demonstration> data) {
  std::ofstream out = open_out(path);
  for (const auto& d : data) out << demonstration_to_json(d) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<Demonstration> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<Demonstration> data;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      data.push_back(demonstration_from_json(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return data;
}

void save_policy(const std::filesystem::path& path, const Policy& policy) {
  const Normalizer::Ranges r = policy.normalizer.ranges();
  json j;
  j["format"] = "dpanther-policy";
  j["version"] = 1;
  j["arch"] = policy.params.layer_sizes;
  j["normalizer"] = {{"obs_lo", vector_json(r.obs_lo)}, {"obs_hi", vector_json(r.obs_hi)},
                     {"act_lo", vector_json(r.act_lo)}, {"act_hi", vector_json(r.act_hi)},
                     {"t_min", r.t_min},                {"t_pred", r.t_pred}};
  j["weights"] = vector_json(policy.params.theta);
  std::ofstream out = open_out(path);
  out << j.dump() << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Policy load_policy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  const json j = json::parse(in);
  if (j.value("format", "") != "dpanther-policy" || j.value("version", 0) != 1) {
    throw std::runtime_error(path.string() + " is not a version-1 dpanther policy");
  }
  Policy p;
  p.params = PolicyParams::zeros(j.at("arch").get<std::vector<int>>());
  p.params.theta = json_vector(j.at("weights"), p.params.num_parameters());
  const json& n = j.at("normalizer");
  Normalizer::Ranges r;
  r.obs_lo = json_vector(n.at("obs_lo"), Observation::kSize);
  r.obs_hi = json_vector(n.at("obs_hi"), Observation::kSize);
  r.act_lo = json_vector(n.at("act_lo"), 12);
  r.act_hi = json_vector(n.at("act_hi"), 12);
  r.t_min = n.at("t_min").get<double>();
  r.t_pred = n.at("t_pred").get<double>();
  p.normalizer = Normalizer::from_ranges(r);
  return p;
}

void write_loss_csv(const std::filesystem::path& path, std::span<const double> loss_curve,
                    const std::string& config_hash) {
  std::ofstream out = open_out(path);
  out << "# config_hash=" << config_hash << '\n' << "epoch,loss\n";
  for (std::size_t e = 0; e < loss_curve.size(); ++e) out << e << ',' << loss_curve[e] << '\n';
}

std::string replan_record_to_json(const ReplanRecord& r) {
  json j;
  j["time"] = r.time;
  j["t_d"] = r.t_d;
  j["observation"] = vector_json(r.observation.flatten());
  j["obstacle_index"] = r.obstacle_index;
  j["n_candidates"] = r.n_candidates;
  j["n_collision_free"] = r.n_collision_free;
  j["collision_free"] = r.collision_free;
  json costs = json::array();
  for (double c : r.augmented_costs) costs.push_back(std::isfinite(c) ? json(c) : json(nullptr));
  j["augmented_costs"] = costs;
  j["chosen"] = r.chosen;
  j["fallback"] = r.fallback;
  j["planner_latency_s"] = r.planner_latency_s;
  return j.dump();
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace dpanther
