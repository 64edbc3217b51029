#include "dame/chain_io.hpp"

#include <fstream>
#include <string>

#include "dame/csv.hpp"
#include "dame/errors.hpp"

namespace dame {
namespace {

namespace fs = std::filesystem;

class Writer {
 public:
  Writer(const fs::path& path, const char* header) : path_(path), out_(path) {
    if (!out_) throw DataError("cannot write " + path.string());
    out_ << header << '\n';
  }
  template <class... Idx>
  void row(std::size_t draw, double value, Idx... idx) {
    out_ << draw;
    ((out_ << ',' << idx), ...);
    out_ << ',' << csv::format_double(value) << '\n';
  }
  std::ofstream& stream() { return out_; }
  ~Writer() noexcept(false) {
    out_.flush();
    if (!out_ && std::uncaught_exceptions() == 0) throw DataError("write failed: " + path_.string());
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

struct Reader {
  csv::Table table;
  fs::path path;

  Reader(const fs::path& p, const std::vector<std::string>& header) : table(csv::read(p, header)), path(p) {}

  std::size_t size() const { return table.rows.size(); }
  long idx(std::size_t row, std::size_t col, long lo, long hi) const {
    const long v = csv::parse_int(table.rows[row][col], path, table.line_numbers[row]);
    if (v < lo || v > hi) {
      throw DataError(path.string() + ":" + std::to_string(table.line_numbers[row]) + ": index " +
                      std::to_string(v) + " out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    return v;
  }
  double value(std::size_t row) const {
    return csv::parse_double(table.rows[row].back(), path, table.line_numbers[row]);
  }
};

}  // namespace

void write_draws(const fs::path& dir, const Model& model, const std::vector<ParameterState>& draws) {
  fs::create_directories(dir);
  const int T = model.T();
  const int N = model.N();
  const int P = model.P();
  const int R = model.R();
  const auto& cfg = model.config();
  {
    Writer w(dir / "beta.csv", "draw,p,t,value");
    for (std::size_t k = 0; k < draws.size(); ++k)
      for (int p = 0; p < P; ++p)
        for (int t = 0; t < T; ++t) w.row(k + 1, draws[k].beta(p, t), p + 1, t + 1);
  }
  {
    Writer w(dir / "theta.csv", "draw,i,t,value");
    for (std::size_t k = 0; k < draws.size(); ++k)
      for (int i = 0; i < N; ++i)
        for (int t = 0; t < T; ++t) w.row(k + 1, draws[k].theta(i, t), i + 1, t + 1);
  }
  {
    Writer w(dir / "d.csv", "draw,r,t,value");
    for (std::size_t k = 0; k < draws.size(); ++k)
      for (int r = 0; r < R; ++r)
        for (int t = 0; t < T; ++t) w.row(k + 1, draws[k].d(r, t), r + 1, t + 1);
  }
  {
    Writer w(dir / "u.csv", "draw,t,i,r,value");
    for (std::size_t k = 0; k < draws.size(); ++k)
      for (int t = 0; t < T; ++t)
        for (int i = 0; i < N; ++i)
          for (int r = 0; r < R; ++r) w.row(k + 1, draws[k].u[t](i, r), t + 1, i + 1, r + 1);
  }
  {
    Writer w(dir / "tau_u.csv", "draw,r,t,value");
    for (std::size_t k = 0; k < draws.size(); ++k)
      for (int r = 0; r < R; ++r)
        for (int t = 0; t < T; ++t) w.row(k + 1, draws[k].tau_u(r, t), r + 1, t + 1);
  }
  {
    Writer w(dir / "sigma2.csv", "draw,value");
    for (std::size_t k = 0; k < draws.size(); ++k) w.row(k + 1, draws[k].sigma2);
  }
  {
    Writer w(dir / "hyper.csv", "draw,block,index,param,value");
    auto put = [&](std::size_t k, const char* block, int index, const GpHyper& h) {
      w.row(k + 1, h.tau, block, index, "tau");
      w.row(k + 1, h.kappa, block, index, "kappa");
    };
    for (std::size_t k = 0; k < draws.size(); ++k) {
      for (int p = 0; p < P; ++p) put(k, "beta", p + 1, draws[k].hyper_beta[p]);
      if (cfg.has_theta()) put(k, "theta", 1, draws[k].hyper_theta);
      if (cfg.estimates_d())
        for (int r = 0; r < R; ++r) put(k, "d", r + 1, draws[k].hyper_d[r]);
    }
  }
  {
    Writer w(dir / "imputed.csv", "draw,t,i,j,value");
    const auto& miss = model.random_missing();
    for (std::size_t k = 0; k < draws.size(); ++k)
      for (std::size_t m = 0; m < miss.size(); ++m)
        w.row(k + 1, draws[k].imputed[static_cast<Eigen::Index>(m)], miss[m].t + 1, miss[m].i + 1, miss[m].j + 1);
  }
}

std::vector<ParameterState> read_draws(const fs::path& dir, const Model& model) {
  const int T = model.T();
  const int N = model.N();
  const int P = model.P();
  const int R = model.R();
  const auto& miss = model.random_missing();

  Reader sigma(dir / "sigma2.csv", {"draw", "value"});
  const long D = static_cast<long>(sigma.size());
  std::vector<ParameterState> draws(D, ParameterState::zeros(P, N, R, T, miss.size()));
  for (std::size_t row = 0; row < sigma.size(); ++row) {
    draws[sigma.idx(row, 0, 1, D) - 1].sigma2 = sigma.value(row);
  }

  auto matrix_family = [&](const char* file, const char* index_name, int rows, auto&& slot) {
    Reader rd(dir / file, {"draw", index_name, "t", "value"});
    for (std::size_t row = 0; row < rd.size(); ++row) {
      const long k = rd.idx(row, 0, 1, D) - 1;
      const long a = rd.idx(row, 1, 1, rows) - 1;
      const long t = rd.idx(row, 2, 1, T) - 1;
      slot(draws[k])(a, t) = rd.value(row);
    }
  };
  matrix_family("beta.csv", "p", P, [](ParameterState& s) -> Matrix& { return s.beta; });
  matrix_family("theta.csv", "i", N, [](ParameterState& s) -> Matrix& { return s.theta; });
  matrix_family("d.csv", "r", R, [](ParameterState& s) -> Matrix& { return s.d; });
  matrix_family("tau_u.csv", "r", R, [](ParameterState& s) -> Matrix& { return s.tau_u; });

  {
    Reader rd(dir / "u.csv", {"draw", "t", "i", "r", "value"});
    for (std::size_t row = 0; row < rd.size(); ++row) {
      const long k = rd.idx(row, 0, 1, D) - 1;
      const long t = rd.idx(row, 1, 1, T) - 1;
      const long i = rd.idx(row, 2, 1, N) - 1;
      const long r = rd.idx(row, 3, 1, R) - 1;
      draws[k].u[t](i, r) = rd.value(row);
    }
  }
  {
    Reader rd(dir / "hyper.csv", {"draw", "block", "index", "param", "value"});
    for (std::size_t row = 0; row < rd.size(); ++row) {
      const auto& f = rd.table.rows[row];
      const long k = rd.idx(row, 0, 1, D) - 1;
      GpHyper* h = nullptr;
      if (f[1] == "beta") {
        h = &draws[k].hyper_beta[rd.idx(row, 2, 1, P) - 1];
      } else if (f[1] == "theta") {
        h = &draws[k].hyper_theta;
      } else if (f[1] == "d") {
        h = &draws[k].hyper_d[rd.idx(row, 2, 1, R) - 1];
      } else {
        throw DataError(rd.path.string() + ":" + std::to_string(rd.table.line_numbers[row]) + ": unknown block '" +
                        f[1] + "'");
      }
      if (f[3] == "tau") {
        h->tau = rd.value(row);
      } else if (f[3] == "kappa") {
        h->kappa = rd.value(row);
      } else {
        throw DataError(rd.path.string() + ":" + std::to_string(rd.table.line_numbers[row]) + ": unknown param '" +
                        f[3] + "'");
      }
    }
  }
  {
    Reader rd(dir / "imputed.csv", {"draw", "t", "i", "j", "value"});
    if (rd.size() != static_cast<std::size_t>(D) * miss.size()) {
      throw DataError(rd.path.string() + ": expected " + std::to_string(D * miss.size()) +
                      " rows for the random-missing positions of this dataset");
    }
    for (std::size_t row = 0; row < rd.size(); ++row) {
      const long k = rd.idx(row, 0, 1, D) - 1;
      const std::size_t m = row % miss.size();
      const long t = rd.idx(row, 1, 1, T) - 1;
      const long i = rd.idx(row, 2, 1, N) - 1;
      const long j = rd.idx(row, 3, 1, N) - 1;
      if (t != miss[m].t || i != miss[m].i || j != miss[m].j) {
        throw DataError(rd.path.string() + ":" + std::to_string(rd.table.line_numbers[row]) +
                        ": position is not the expected random-missing dyad");
      }
      draws[k].imputed[static_cast<Eigen::Index>(m)] = rd.value(row);
    }
  }
  return draws;
}

}  // namespace dame
