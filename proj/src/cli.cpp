#include "dame/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "dame/chain_io.hpp"
#include "dame/config.hpp"
#include "dame/csv.hpp"
#include "dame/errors.hpp"
#include "dame/generator.hpp"
#include "dame/posterior.hpp"
#include "dame/sampler.hpp"

#ifndef DAME_VERSION
#define DAME_VERSION "unknown"
#endif

namespace dame::cli {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr const char* kQuantileRule = "linear interpolation between order statistics, h = (n - 1) q";

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) { return std::isfinite(v) ? csv::format_double(v) : ""; }

// An output directory may be reused only when it is empty, or with --force
// when it holds an earlier run (identified by its manifest).
void prepare_out_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw ConfigError(dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir)) {
      if (!fs::exists(dir / "manifest.json")) {
        throw ConfigError(dir.string() + " is not empty and holds no earlier run; choose an empty directory");
      }
      if (!force) throw ConfigError(dir.string() + " already holds a run; pass --force to overwrite");
      fs::remove_all(dir);
    }
  }
  fs::create_directories(dir);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("write failed: " + path.string());
}

void write_manifest(const fs::path& dir, json manifest) {
  manifest["version"] = DAME_VERSION;
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

json digest_entry(const fs::path& path) { return {{"path", fs::absolute(path).string()}, {"sha256", sha256_file(path)}}; }

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

json hyper_json(const GpHyper& h) { return {{"tau", h.tau}, {"kappa", h.kappa}}; }

json truth_json(const SimulatedData& sim, const Model& model) {
  const ParameterState& s = sim.truth;
  json j;
  j["beta"] = matrix_json(s.beta);
  j["theta"] = matrix_json(s.theta);
  j["d"] = matrix_json(s.d);
  json u = json::array();
  for (const auto& ut : s.u) u.push_back(matrix_json(ut));
  j["u"] = u;
  j["tau_u"] = matrix_json(s.tau_u);
  j["sigma2"] = s.sigma2;
  json hb = json::array();
  for (const auto& h : s.hyper_beta) hb.push_back(hyper_json(h));
  j["hyper_beta"] = hb;
  j["hyper_theta"] = hyper_json(s.hyper_theta);
  json hd = json::array();
  for (const auto& h : s.hyper_d) hd.push_back(hyper_json(h));
  j["hyper_d"] = hd;
  json hidden = json::array();
  const auto& miss = model.random_missing();
  for (std::size_t m = 0; m < miss.size(); ++m) {
    hidden.push_back({{"t", miss[m].t + 1},
                      {"i", model.data().network.nodes[miss[m].i]},
                      {"j", model.data().network.nodes[miss[m].j]},
                      {"value", s.imputed[static_cast<Eigen::Index>(m)]}});
  }
  j["hidden"] = hidden;
  return j;
}

// ---------------------------------------------------------------------------
// Minimal SVG output

class Svg {
 public:
  Svg(double x0, double x1, double y0, double y1, std::string title, double width = 640, double height = 400)
      : x0_(x0), x1_(x1 > x0 ? x1 : x0 + 1), y0_(y0), y1_(y1 > y0 ? y1 : y0 + 1), w_(width), h_(height) {
    body_ << "<text x=\"" << w_ / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title
          << "</text>\n";
    body_ << "<rect x=\"" << kPad << "\" y=\"" << kPad << "\" width=\"" << w_ - 2 * kPad << "\" height=\""
          << h_ - 2 * kPad << "\" fill=\"none\" stroke=\"#888\"/>\n";
    label(x0_, y0_, fmt_tick(y0_), "end", -6, 4);
    label(x0_, y1_, fmt_tick(y1_), "end", -6, 4);
    label(x0_, y0_, fmt_tick(x0_), "middle", 0, 16);
    label(x1_, y0_, fmt_tick(x1_), "middle", 0, 16);
  }

  double px(double x) const { return kPad + (x - x0_) / (x1_ - x0_) * (w_ - 2 * kPad); }
  double py(double y) const { return h_ - kPad - (y - y0_) / (y1_ - y0_) * (h_ - 2 * kPad); }

  void line(double xa, double ya, double xb, double yb, const char* color, double width = 1.5) {
    body_ << "<line x1=\"" << px(xa) << "\" y1=\"" << py(ya) << "\" x2=\"" << px(xb) << "\" y2=\"" << py(yb)
          << "\" stroke=\"" << color << "\" stroke-width=\"" << width << "\"/>\n";
  }
  void point(double x, double y, const char* color, double r = 3) {
    body_ << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"" << r << "\" fill=\"" << color
          << "\"/>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const char* color) {
    body_ << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
    for (const auto& [x, y] : pts) body_ << px(x) << ',' << py(y) << ' ';
    body_ << "\"/>\n";
  }
  void ellipse(double cx, double cy, double rx, double ry, double angle, const char* color) {
    const double sx = (w_ - 2 * kPad) / (x1_ - x0_);
    const double sy = (h_ - 2 * kPad) / (y1_ - y0_);
    const double deg = -angle * 180.0 / M_PI;
    body_ << "<ellipse cx=\"" << px(cx) << "\" cy=\"" << py(cy) << "\" rx=\"" << rx * sx << "\" ry=\"" << ry * sy
          << "\" transform=\"rotate(" << deg << ' ' << px(cx) << ' ' << py(cy) << ")\" fill=\"none\" stroke=\""
          << color << "\" stroke-opacity=\"0.5\"/>\n";
  }
  void label(double x, double y, const std::string& text, const char* anchor = "start", double dx = 4,
             double dy = -4) {
    body_ << "<text x=\"" << px(x) + dx << "\" y=\"" << py(y) + dy << "\" font-size=\"10\" text-anchor=\"" << anchor
          << "\">" << text << "</text>\n";
  }

  void save(const fs::path& path) const {
    std::ostringstream doc;
    doc << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w_ << "\" height=\"" << h_ << "\">\n"
        << body_.str() << "</svg>\n";
    write_text(path, doc.str());
  }

 private:
  static std::string fmt_tick(double v) {
    std::ostringstream s;
    s << std::setprecision(3) << v;
    return s.str();
  }
  static constexpr double kPad = 40;
  double x0_, x1_, y0_, y1_, w_, h_;
  std::ostringstream body_;
};

std::pair<double, double> padded_range(double lo, double hi) {
  if (!(hi > lo)) return {lo - 1, hi + 1};
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

// ---------------------------------------------------------------------------
// Loading a fit back

struct LoadedFit {
  json manifest;
  std::shared_ptr<const Model> model;
  PosteriorDraws draws;
  int chains = 0;
};

LoadedFit load_fit(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw DataError(dir.string() + ": no manifest.json; not a fit output directory");
  LoadedFit fit;
  try {
    std::ifstream in(manifest_path);
    fit.manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(manifest_path.string() + ": " + e.what());
  }
  if (fit.manifest.value("command", "") != "fit") throw DataError(manifest_path.string() + ": not a fit manifest");
  RunConfig rc = parse_config(fit.manifest.at("config").dump(), manifest_path.string());
  // The stored data copy already carries any intercept column.
  fit.model = std::make_shared<const Model>(load_dataset_dir(dir / "data", false), rc.model);
  fit.draws.model = fit.model;
  for (int k = 1;; ++k) {
    const fs::path chain_dir = dir / ("chain_" + std::to_string(k));
    if (!fs::exists(chain_dir)) break;
    auto d = read_draws(chain_dir, *fit.model);
    fit.draws.draws.insert(fit.draws.draws.end(), std::make_move_iterator(d.begin()),
                           std::make_move_iterator(d.end()));
    fit.chains = k;
  }
  if (fit.chains == 0) throw DataError(dir.string() + ": no chain_1 directory");
  if (fit.draws.draws.empty()) throw DataError(dir.string() + ": the chains hold no retained draws");
  return fit;
}

// ---------------------------------------------------------------------------
// Analysis tasks

void task_summary(const LoadedFit& fit, const fs::path& out, bool svg) {
  for (const auto& family : available_families(fit.model->config())) {
    const FamilySummary s = summarize(fit.draws, family);
    std::ofstream f(out / ("summary_" + family + ".csv"));
    if (!f) throw ConfigError("cannot write summary for " + family);
    f << "family";
    for (const auto& n : s.index_names) f << ',' << n;
    f << ",mean,lo95,hi95\n";
    for (const auto& row : s.rows) {
      f << family;
      for (int v : row.index) f << ',' << v;
      f << ',' << fmt(row.mean) << ',' << fmt(row.lo95) << ',' << fmt(row.hi95) << '\n';
    }
    if (svg && family == "beta" && !s.rows.empty()) {
      const int T = fit.model->T();
      double lo = s.rows[0].lo95, hi = s.rows[0].hi95;
      for (const auto& row : s.rows) {
        lo = std::min(lo, row.lo95);
        hi = std::max(hi, row.hi95);
      }
      const auto [y0, y1] = padded_range(lo, hi);
      Svg plot(0.5, T + 0.5, y0, y1, "beta: posterior mean and 95% interval by timepoint");
      for (int p = 0; p < fit.model->P(); ++p) {
        std::vector<std::pair<double, double>> pts;
        for (int t = 0; t < T; ++t) {
          const auto& row = s.rows[static_cast<std::size_t>(p) * T + t];
          plot.line(t + 1, row.lo95, t + 1, row.hi95, "#9ab");
          pts.emplace_back(t + 1, row.mean);
        }
        plot.polyline(pts, "#246");
      }
      plot.save(out / "summary_beta.svg");
    }
  }
}

struct PpcResult {
  std::vector<DegreeMoments> replicates;
  DegreeMoments observed;
};

PpcResult run_ppc(const LoadedFit& fit, Rng& rng, int count) {
  PpcResult r;
  r.replicates = ppc_degrees(rng, fit.draws, count);
  const auto& net = fit.model->data().network.values;
  for (int m = 1; m <= 3; ++m) r.observed[m - 1] = degree_stats(net, m);
  return r;
}

void task_ppc(const LoadedFit& fit, const PpcResult& ppc, const fs::path& out, bool svg, int shown_node) {
  const Model& model = *fit.model;
  const auto& nodes = model.data().network.nodes;
  const int T = model.T();
  const int N = model.N();
  {
    std::ofstream f(out / "ppc_degrees.csv");
    if (!f) throw ConfigError("cannot write ppc_degrees.csv");
    f << "replicate,t,node,moment,degree\n";
    for (std::size_t k = 0; k < ppc.replicates.size(); ++k)
      for (int t = 0; t < T; ++t)
        for (int i = 0; i < N; ++i)
          for (int m = 0; m < 3; ++m)
            f << k + 1 << ',' << t + 1 << ',' << nodes[i] << ',' << m + 1 << ','
              << fmt(ppc.replicates[k][m](i, t)) << '\n';
  }
  std::ofstream f(out / "ppc_intervals.csv");
  if (!f) throw ConfigError("cannot write ppc_intervals.csv");
  f << "t,node,moment,available,observed,lo95,hi95,covered\n";
  std::vector<std::array<double, 3>> node_rows;  // per (moment, t) for the plot
  std::vector<double> vals(ppc.replicates.size());
  for (int m = 0; m < 3; ++m) {
    for (int t = 0; t < T; ++t) {
      for (int i = 0; i < N; ++i) {
        for (std::size_t k = 0; k < vals.size(); ++k) vals[k] = ppc.replicates[k][m](i, t);
        const double lo = quantile(vals, 0.025);
        const double hi = quantile(vals, 0.975);
        const double obs = ppc.observed[m](i, t);
        f << t + 1 << ',' << nodes[i] << ',' << m + 1 << ',' << (model.data().availability(i, t) ? 1 : 0) << ','
          << fmt(obs) << ',' << fmt(lo) << ',' << fmt(hi) << ',' << (obs >= lo && obs <= hi ? 1 : 0) << '\n';
        if (i == shown_node) node_rows.push_back({lo, hi, obs});
      }
    }
  }
  if (!svg) return;
  for (int m = 0; m < 3; ++m) {
    double lo = node_rows[m * T][0], hi = node_rows[m * T][1];
    for (int t = 0; t < T; ++t) {
      const auto& r = node_rows[m * T + t];
      lo = std::min({lo, r[0], r[2]});
      hi = std::max({hi, r[1], r[2]});
    }
    const auto [y0, y1] = padded_range(lo, hi);
    Svg plot(0.5, T + 0.5, y0, y1,
             "node " + nodes[shown_node] + ": predictive 95% interval of degree moment " + std::to_string(m + 1));
    for (int t = 0; t < T; ++t) {
      const auto& r = node_rows[m * T + t];
      plot.line(t + 1, r[0], t + 1, r[1], "#9ab", 4);
      plot.point(t + 1, r[2], "#c33");
    }
    plot.save(out / ("ppc_moment" + std::to_string(m + 1) + ".svg"));
  }
}

void task_dc(const LoadedFit& fit, const PpcResult& ppc, const fs::path& out, bool svg, int max_lag) {
  const Model& model = *fit.model;
  const AvailabilityMatrix* avail = &model.data().availability;
  const int lags = std::min(max_lag, model.T() - 1);
  if (lags < 1) throw DataError("dc needs at least two timepoints");
  std::ofstream obs_file(out / "dc_observed.csv");
  std::ofstream rep_file(out / "dc_replicates.csv");
  if (!obs_file || !rep_file) throw ConfigError("cannot write dc files");
  obs_file << "lag,dc\n";
  rep_file << "replicate,lag,dc\n";
  std::vector<std::vector<double>> per_lag(lags);
  std::vector<double> observed(lags, NAN);
  for (int l = 1; l <= lags; ++l) {
    const auto o = lagged_degree_correlation(ppc.observed[0], l, avail);
    observed[l - 1] = o.value_or(NAN);
    obs_file << l << ',' << (o ? fmt(*o) : "") << '\n';
    for (std::size_t k = 0; k < ppc.replicates.size(); ++k) {
      const auto v = lagged_degree_correlation(ppc.replicates[k][0], l, avail);
      rep_file << k + 1 << ',' << l << ',' << (v ? fmt(*v) : "") << '\n';
      if (v) per_lag[l - 1].push_back(*v);
    }
  }
  if (!svg) return;
  Svg plot(0.5, lags + 0.5, -1.0, 1.0, "lagged degree correlation: replicate spread and observed value");
  for (int l = 1; l <= lags; ++l) {
    const auto& v = per_lag[l - 1];
    if (!v.empty()) {
      plot.line(l, quantile(v, 0.025), l, quantile(v, 0.975), "#9ab", 2);
      plot.line(l, quantile(v, 0.25), l, quantile(v, 0.75), "#468", 10);
      plot.point(l, quantile(v, 0.5), "#fff", 2);
    }
    if (std::isfinite(observed[l - 1])) plot.point(l, observed[l - 1], "#c33", 4);
  }
  plot.save(out / "dc.svg");
}

void task_latent(const LoadedFit& fit, const fs::path& out, bool svg) {
  const Model& model = *fit.model;
  const auto& nodes = model.data().network.nodes;
  const LatentPositions latent = identify_latent(fit.draws, model.R());
  if (latent.rank_deficient > 0) {
    std::cerr << "warning: " << latent.rank_deficient
              << " (draw, t) matrices had rank below R; their missing coordinates are zero\n";
  }
  if (latent.sign_mismatches > 0) {
    std::cerr << "warning: " << latent.sign_mismatches
              << " (draw, t) sign patterns differ from the reference and were left unaligned\n";
  }
  {
    std::ofstream f(out / "latent_draws.csv");
    if (!f) throw ConfigError("cannot write latent_draws.csv");
    f << "draw,t,node,dim,value,sign\n";
    for (std::size_t k = 0; k < latent.coords.size(); ++k)
      for (int t = 0; t < model.T(); ++t)
        for (int i = 0; i < model.N(); ++i)
          for (int r = 0; r < latent.R; ++r)
            f << k + 1 << ',' << t + 1 << ',' << nodes[i] << ',' << r + 1 << ','
              << fmt(latent.coords[k][t](i, r)) << ',' << static_cast<int>(latent.signs[k][t][r]) << '\n';
  }
  const auto summary = summarize_latent(latent);
  std::ofstream f(out / "latent_summary.csv");
  if (!f) throw ConfigError("cannot write latent_summary.csv");
  f << "t,node,dim,sign,mean,lo95,hi95\n";
  for (const auto& s : summary)
    for (int r = 0; r < latent.R; ++r)
      f << s.t + 1 << ',' << nodes[s.node] << ',' << r + 1 << ','
        << static_cast<int>(latent.reference_signs[s.t][r]) << ',' << fmt(s.mean[r]) << ',' << fmt(s.lo95[r])
        << ',' << fmt(s.hi95[r]) << '\n';
  if (latent.R < 2) return;
  std::ofstream e(out / "latent_ellipses.csv");
  if (!e) throw ConfigError("cannot write latent_ellipses.csv");
  e << "t,node,mean1,mean2,semi_major,semi_minor,angle\n";
  for (const auto& s : summary)
    e << s.t + 1 << ',' << nodes[s.node] << ',' << fmt(s.mean[0]) << ',' << fmt(s.mean[1]) << ','
      << fmt(s.semi_major) << ',' << fmt(s.semi_minor) << ',' << fmt(s.angle) << '\n';

  if (!svg) return;
  const int t_last = model.T() - 1;
  double span = 1e-9;
  for (const auto& s : summary) {
    if (s.t != t_last) continue;
    span = std::max({span, std::abs(s.mean[0]) + s.semi_major, std::abs(s.mean[1]) + s.semi_major});
  }
  span *= 1.05;
  Svg plot(-span, span, -span, span, "latent positions at t = " + std::to_string(model.T()) + " (95% ellipses)", 520,
           520);
  for (const auto& s : summary) {
    if (s.t != t_last || !model.data().availability(s.node, s.t)) continue;
    plot.ellipse(s.mean[0], s.mean[1], s.semi_major, s.semi_minor, s.angle, "#68a");
    plot.point(s.mean[0], s.mean[1], "#234", 2.5);
    plot.label(s.mean[0], s.mean[1], nodes[s.node]);
  }
  plot.save(out / "latent.svg");
}

}  // namespace

// ---------------------------------------------------------------------------

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init failed");
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::ostringstream hex;
  for (unsigned int k = 0; k < len; ++k) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[k]);
  return hex.str();
}

std::set<std::string> parse_tasks(const std::string& list) {
  static const std::set<std::string> known{"summary", "ppc", "dc", "latent"};
  std::set<std::string> tasks;
  for (const auto& t : csv::split(list)) {
    if (t.empty()) continue;
    if (!known.count(t)) throw ConfigError("unknown analysis task '" + t + "' (expected summary, ppc, dc, latent)");
    tasks.insert(t);
  }
  if (tasks.empty()) throw ConfigError("no analysis tasks given");
  return tasks;
}

void cmd_simulate(const fs::path& config_path, const fs::path& out, bool force) {
  const auto start = Clock::now();
  const RunConfig rc = load_config(config_path);
  if (!rc.simulate) {
    throw ConfigError("missing required section 'simulate' (needs at least N and T; documented defaults 20 and 10)");
  }
  const SimulateSection& ss = *rc.simulate;
  const SimulatedData sim =
      ss.transitivity ? simulate_transitivity_dataset(ss.sim, *ss.transitivity) : simulate_dataset(ss.sim);

  prepare_out_dir(out, force);
  const auto& net = sim.data.network;
  write_network_csv(out / "network.csv", net);
  if (sim.data.covariates.num_covariates() > 0) write_covariates_csv(out / "covariates.csv", net, sim.data.covariates);
  write_availability_csv(out / "availability.csv", net, sim.data.availability);

  ModelConfig mc = rc.model;
  mc.R = ss.sim.R;
  mc.fixed_d.reset();
  const Model model(sim.data, mc);
  write_text(out / "truth.json", truth_json(sim, model).dump(2) + "\n");

  json manifest;
  manifest["command"] = "simulate";
  manifest["config"] = json::parse(config_echo(rc));
  manifest["seed"] = ss.sim.seed;
  manifest["inputs"] = json::array({digest_entry(config_path)});
  json outputs = json::array();
  for (const char* name : {"network.csv", "covariates.csv", "availability.csv", "truth.json"}) {
    if (fs::exists(out / name)) outputs.push_back({{"file", name}, {"sha256", sha256_file(out / name)}});
  }
  manifest["outputs"] = outputs;
  manifest["wall_seconds"] = seconds_since(start);
  write_manifest(out, manifest);
}

void cmd_fit(const FitOptions& opt) {
  const auto start = Clock::now();
  if (opt.chains < 1) throw ConfigError("--chains must be >= 1");
  const RunConfig rc = load_config(opt.config);
  Dataset data = load_dataset_dir(opt.data, rc.add_intercept);
  // Validate the model before touching the output directory.
  auto base_model = std::make_shared<const Model>(data, rc.model);

  prepare_out_dir(opt.out, opt.force);
  const fs::path data_copy = opt.out / "data";
  fs::create_directories(data_copy);
  write_network_csv(data_copy / "network.csv", data.network);
  if (data.covariates.num_covariates() > 0) write_covariates_csv(data_copy / "covariates.csv", data.network, data.covariates);
  write_availability_csv(data_copy / "availability.csv", data.network, data.availability);

  // The stored copy already includes the intercept column.
  RunConfig stored = rc;
  stored.add_intercept = false;

  std::vector<json> chain_info(opt.chains);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (int k = 0; k < opt.chains; ++k) {
    try {
      ModelConfig mc = rc.model;
      mc.chain.seed = rc.model.chain.seed + static_cast<std::uint64_t>(k);
      const Model model(base_model->data(), mc);
      ChainResult result = run_chain(model);
      write_draws(opt.out / ("chain_" + std::to_string(k + 1)), model, result.draws);
      json acc = json::array();
      for (const auto& a : result.acceptance) {
        acc.push_back({{"block", a.block},
                       {"proposals", a.proposals},
                       {"accepts", a.accepts},
                       {"rate", a.proposals > 0 ? static_cast<double>(a.accepts) / a.proposals : 0.0},
                       {"final_scale", a.final_scale}});
      }
      chain_info[k] = {{"chain", k + 1},
                       {"seed", mc.chain.seed},
                       {"retained", result.draws.size()},
                       {"acceptance", acc},
                       {"jitter_events", result.jitter_events},
                       {"warnings", result.warnings},
                       {"wall_seconds", result.wall_seconds}};
      for (const auto& w : result.warnings) {
#pragma omp critical(dame_stderr)
        std::cerr << "chain " << k + 1 << ": warning: " << w << '\n';
      }
    } catch (...) {
#pragma omp critical(dame_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  json inputs = json::array({digest_entry(opt.config)});
  for (const char* name : {"network.csv", "votes.csv", "covariates.csv", "availability.csv"}) {
    if (fs::exists(opt.data / name)) inputs.push_back(digest_entry(opt.data / name));
  }
  json manifest;
  manifest["command"] = "fit";
  manifest["config"] = json::parse(config_echo(stored));
  manifest["data_intercept_added"] = rc.add_intercept;
  manifest["seed"] = rc.model.chain.seed;
  manifest["chains"] = chain_info;
  manifest["inputs"] = inputs;
  manifest["wall_seconds"] = seconds_since(start);
  write_manifest(opt.out, manifest);
}

void cmd_analyze(const AnalyzeOptions& opt) {
  const auto start = Clock::now();
  if (opt.tasks.empty()) throw ConfigError("no analysis tasks given");
  if (opt.ppc_count < 1) throw ConfigError("--ppc-count must be >= 1");
  const LoadedFit fit = load_fit(opt.draws);
  const Model& model = *fit.model;
  if (opt.tasks.count("latent") && !model.config().has_multiplicative()) {
    throw DataError("task 'latent' needs multiplicative draws, but this fit is variant " +
                    to_string(model.config().variant) + " with R = " + std::to_string(model.config().R));
  }
  int shown_node = -1;
  if (opt.node) {
    const auto& nodes = model.data().network.nodes;
    const auto it = std::find(nodes.begin(), nodes.end(), *opt.node);
    if (it == nodes.end()) throw DataError("unknown node label '" + *opt.node + "'");
    shown_node = static_cast<int>(it - nodes.begin());
  }

  const fs::path out = opt.out ? *opt.out : opt.draws / "analysis";
  prepare_out_dir(out, opt.force);
  Rng rng(opt.seed);
  if (shown_node < 0) shown_node = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(model.N()));

  if (opt.tasks.count("summary")) task_summary(fit, out, opt.svg);
  if (opt.tasks.count("ppc") || opt.tasks.count("dc")) {
    const PpcResult ppc = run_ppc(fit, rng, opt.ppc_count);
    if (opt.tasks.count("ppc")) task_ppc(fit, ppc, out, opt.svg, shown_node);
    if (opt.tasks.count("dc")) task_dc(fit, ppc, out, opt.svg, opt.max_lag);
  }
  if (opt.tasks.count("latent")) task_latent(fit, out, opt.svg);

  json manifest;
  manifest["command"] = "analyze";
  manifest["tasks"] = std::vector<std::string>(opt.tasks.begin(), opt.tasks.end());
  manifest["seed"] = opt.seed;
  manifest["draws"] = fs::absolute(opt.draws).string();
  manifest["retained_draws"] = fit.draws.draws.size();
  manifest["chains"] = fit.chains;
  manifest["ppc_count"] = opt.ppc_count;
  manifest["max_lag"] = opt.max_lag;
  manifest["ppc_node"] = model.data().network.nodes[shown_node];
  manifest["quantile_rule"] = kQuantileRule;
  manifest["inputs"] = json::array({digest_entry(opt.draws / "manifest.json")});
  manifest["wall_seconds"] = seconds_since(start);
  write_manifest(out, manifest);
}

int guarded(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace dame::cli
