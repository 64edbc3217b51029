#include "dame/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dame/errors.hpp"

namespace dame {
namespace {

using nlohmann::json;

KernelShape parse_kernel(const std::string& s) {
  if (s == "exponential") return KernelShape::kExponential;
  if (s == "squared") return KernelShape::kSquaredExponential;
  throw ConfigError("kernel must be 'exponential' or 'squared' (got '" + s + "')");
}

std::string kernel_name(KernelShape k) { return k == KernelShape::kExponential ? "exponential" : "squared"; }

// Reads typed keys from one section and rejects any key nobody asked for.
class Section {
 public:
  Section(const json& root, const std::string& name) : name_(name) {
    if (!root.contains(name)) return;
    node_ = &root.at(name);
    if (!node_->is_object()) throw ConfigError("section '" + name + "' must be an object");
  }

  bool present() const { return node_ != nullptr; }

  template <class T>
  void get(const std::string& key, T& out) {
    known_.insert(key);
    if (!node_ || !node_->contains(key)) return;
    try {
      out = node_->at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(name_ + "." + key + ": wrong type");
    }
  }

  template <class T>
  void require(const std::string& key, T& out, const std::string& documented_default) {
    known_.insert(key);
    if (!node_ || !node_->contains(key)) {
      throw ConfigError("missing required field '" + name_ + "." + key + "' (documented default: " +
                        documented_default + ")");
    }
    get(key, out);
  }

  const json* raw(const std::string& key) {
    known_.insert(key);
    if (!node_ || !node_->contains(key)) return nullptr;
    return &node_->at(key);
  }

  void finish() const {
    if (!node_) return;
    for (const auto& [key, value] : node_->items()) {
      if (!known_.count(key)) throw ConfigError("unknown field '" + name_ + "." + key + "'");
    }
  }

 private:
  std::string name_;
  const json* node_ = nullptr;
  std::set<std::string> known_;
};

std::vector<double> read_fixed_d(const json& v, const std::string& where) {
  std::vector<double> out;
  try {
    out = v.get<std::vector<double>>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": expected an array of numbers");
  }
  return out;
}

}  // namespace

RunConfig parse_config(std::string_view text, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": " + e.what());
  }
  if (!root.is_object()) throw ConfigError(source + ": top level must be an object");
  static const std::set<std::string> sections{"data", "model", "priors", "mh", "chain", "simulate"};
  for (const auto& [key, value] : root.items()) {
    if (!sections.count(key)) throw ConfigError("unknown section '" + key + "'");
  }

  RunConfig rc;
  ModelConfig& m = rc.model;

  Section data(root, "data");
  data.get("intercept", rc.add_intercept);
  data.finish();

  Section model(root, "model");
  std::string s;
  if (model.raw("variant")) {
    model.get("variant", s);
    m.variant = parse_variant(s);
  }
  if (model.raw("form")) {
    model.get("form", s);
    m.form = parse_form(s);
  }
  if (model.raw("kernel")) {
    model.get("kernel", s);
    m.kernel = parse_kernel(s);
  }
  model.get("R", m.R);
  model.get("estimate_kappa", m.estimate_kappa);
  model.get("kappa_beta", m.kappa_beta);
  model.get("kappa_theta", m.kappa_theta);
  model.get("kappa_d", m.kappa_d);
  model.get("zero_theta", m.zero_theta);
  if (const json* fd = model.raw("fixed_d"); fd && !fd->is_null()) m.fixed_d = read_fixed_d(*fd, "model.fixed_d");
  model.finish();

  Section priors(root, "priors");
  priors.get("a", m.priors.a);
  priors.get("b", m.priors.b);
  priors.get("a_sigma", m.priors.a_sigma);
  priors.get("b_sigma", m.priors.b_sigma);
  // tau^u shares (a, b) unless set on its own.
  m.priors.a_u = m.priors.a;
  m.priors.b_u = m.priors.b;
  priors.get("a_u", m.priors.a_u);
  priors.get("b_u", m.priors.b_u);
  priors.get("gamma", m.priors.gamma);
  priors.get("kappa_max", m.priors.kappa_max);
  priors.finish();

  Section mh(root, "mh");
  mh.get("step_log_tau", m.mh.step_log_tau);
  mh.get("step_log_kappa", m.mh.step_log_kappa);
  mh.get("target_accept", m.mh.target_accept);
  mh.get("adapt", m.mh.adapt);
  mh.finish();

  Section chain(root, "chain");
  chain.get("iterations", m.chain.iterations);
  chain.get("burn_in", m.chain.burn_in);
  chain.get("thin", m.chain.thin);
  chain.get("seed", m.chain.seed);
  chain.finish();

  Section sim(root, "simulate");
  if (sim.present()) {
    SimulateSection ss;
    SimConfig& c = ss.sim;
    sim.require("N", c.N, "20");
    sim.require("T", c.T, "10");
    sim.get("P", c.P);
    sim.get("R", c.R);
    if (sim.raw("transitivity")) {
      sim.get("transitivity", s);
      ss.transitivity = parse_pattern(s);
      // beta and theta default to independent paths for transitivity data.
      c.kappa_beta = 0.0;
      c.kappa_theta = 0.0;
    }
    sim.get("kappa_beta", c.kappa_beta);
    sim.get("kappa_theta", c.kappa_theta);
    sim.get("kappa_d", c.kappa_d);
    sim.get("a", c.a);
    sim.get("b", c.b);
    sim.get("a_sigma", c.a_sigma);
    sim.get("b_sigma", c.b_sigma);
    if (sim.raw("kernel")) {
      sim.get("kernel", s);
      c.kernel = parse_kernel(s);
    }
    if (const json* fd = sim.raw("fixed_d"); fd && !fd->is_null()) {
      if (ss.transitivity) throw ConfigError("simulate.fixed_d and simulate.transitivity are exclusive");
      const auto v = read_fixed_d(*fd, "simulate.fixed_d");
      if (static_cast<int>(v.size()) != c.R) throw ConfigError("simulate.fixed_d must have R entries");
      Matrix d(c.R, c.T);
      for (int r = 0; r < c.R; ++r) d.row(r).setConstant(v[r]);
      c.fixed_d = d;
    }
    sim.get("holdout_fraction", c.holdout_fraction);
    sim.get("seed", c.seed);
    if (ss.transitivity && c.R != 2) throw ConfigError("simulate.transitivity requires simulate.R = 2");
    c.validate();
    rc.simulate = std::move(ss);
  }
  sim.finish();

  m.validate();
  return rc;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::string config_echo(const RunConfig& rc) {
  const ModelConfig& m = rc.model;
  json j;
  j["data"] = {{"intercept", rc.add_intercept}};
  j["model"] = {{"variant", to_string(m.variant)},
                {"R", m.R},
                {"form", to_string(m.form)},
                {"kernel", kernel_name(m.kernel)},
                {"estimate_kappa", m.estimate_kappa},
                {"kappa_beta", m.kappa_beta},
                {"kappa_theta", m.kappa_theta},
                {"kappa_d", m.kappa_d},
                {"zero_theta", m.zero_theta},
                {"fixed_d", m.fixed_d ? json(*m.fixed_d) : json(nullptr)}};
  j["priors"] = {{"a", m.priors.a},         {"b", m.priors.b},         {"a_sigma", m.priors.a_sigma},
                 {"b_sigma", m.priors.b_sigma}, {"a_u", m.priors.a_u},     {"b_u", m.priors.b_u},
                 {"gamma", m.priors.gamma}, {"kappa_max", m.priors.kappa_max}};
  j["mh"] = {{"step_log_tau", m.mh.step_log_tau},
             {"step_log_kappa", m.mh.step_log_kappa},
             {"target_accept", m.mh.target_accept},
             {"adapt", m.mh.adapt}};
  j["chain"] = {{"iterations", m.chain.iterations},
                {"burn_in", m.chain.burn_in},
                {"thin", m.chain.thin},
                {"seed", m.chain.seed}};
  if (rc.simulate) {
    const SimConfig& c = rc.simulate->sim;
    json sj = {{"N", c.N},
               {"T", c.T},
               {"P", c.P},
               {"R", c.R},
               {"kappa_beta", c.kappa_beta},
               {"kappa_theta", c.kappa_theta},
               {"kappa_d", c.kappa_d},
               {"a", c.a},
               {"b", c.b},
               {"a_sigma", c.a_sigma},
               {"b_sigma", c.b_sigma},
               {"kernel", kernel_name(c.kernel)},
               {"holdout_fraction", c.holdout_fraction},
               {"seed", c.seed}};
    if (rc.simulate->transitivity) {
      sj["transitivity"] = to_string(*rc.simulate->transitivity);
    } else if (c.fixed_d) {
      std::vector<double> v(c.R);
      for (int r = 0; r < c.R; ++r) v[r] = (*c.fixed_d)(r, 0);
      sj["fixed_d"] = v;
    }
    j["simulate"] = sj;
  }
  return j.dump(2);
}

}  // namespace dame
