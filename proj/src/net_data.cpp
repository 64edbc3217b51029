#include "dame/net_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <unordered_map>

#include "dame/csv.hpp"
#include "dame/errors.hpp"

namespace dame {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_integer_label(const std::string& s) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return !s.empty() && ec == std::errc() && ptr == s.data() + s.size();
}

std::string dyad_name(int t, const std::string& a, const std::string& b) {
  return "(t=" + std::to_string(t + 1) + ", " + a + ", " + b + ")";
}

using NodeIndex = std::unordered_map<std::string, int>;

NodeIndex index_nodes(const std::vector<std::string>& nodes) {
  NodeIndex idx;
  for (int n = 0; n < static_cast<int>(nodes.size()); ++n) idx.emplace(nodes[n], n);
  return idx;
}

int lookup_node(const NodeIndex& idx, const std::string& label, const std::filesystem::path& path,
                std::size_t line) {
  auto it = idx.find(label);
  if (it == idx.end()) {
    throw DataError(path.string() + ":" + std::to_string(line) + ": unknown node label '" + label + "'");
  }
  return it->second;
}

int parse_time(const std::string& field, const std::filesystem::path& path, std::size_t line) {
  const long t = csv::parse_int(field, path, line);
  if (t < 1) {
    throw DataError(path.string() + ":" + std::to_string(line) + ": timepoints are 1-based, got " + field);
  }
  return static_cast<int>(t);
}

struct AvailabilityRows {
  csv::Table table;
  std::filesystem::path path;
};

AvailabilityMatrix apply_availability(const std::optional<AvailabilityRows>& rows, const NodeIndex& idx,
                                      int num_nodes, int num_times) {
  auto avail = AvailabilityMatrix::all_available(num_nodes, num_times);
  if (!rows) return avail;
  std::set<std::pair<int, int>> seen;
  for (std::size_t r = 0; r < rows->table.rows.size(); ++r) {
    const auto& f = rows->table.rows[r];
    const auto line = rows->table.line_numbers[r];
    const int n = lookup_node(idx, f[0], rows->path, line);
    const int t = parse_time(f[1], rows->path, line) - 1;
    if (t >= num_times) {
      throw DataError(rows->path.string() + ":" + std::to_string(line) +
                      ": dimension mismatch, timepoint beyond network range");
    }
    const long a = csv::parse_int(f[2], rows->path, line);
    if (a != 0 && a != 1) {
      throw DataError(rows->path.string() + ":" + std::to_string(line) + ": available must be 0 or 1");
    }
    if (!seen.emplace(n, t).second) {
      throw DataError(rows->path.string() + ":" + std::to_string(line) + ": duplicate availability row");
    }
    avail.available(n, t) = static_cast<std::uint8_t>(a);
  }
  avail.validate();
  return avail;
}

CovariateTensor load_covariates(const std::filesystem::path& path, const NodeIndex& idx,
                                const DynamicNetwork& net, const AvailabilityMatrix& avail) {
  const int T = net.num_times();
  const int N = net.num_nodes();
  const auto table = csv::read(path, {"t", "i", "j", "p", "value"});

  CovariateTensor cov = CovariateTensor::empty(T);
  std::map<std::string, int> name_index;
  std::vector<std::vector<Mask>> seen;  // [t][p]

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    const auto line = table.line_numbers[r];
    const int t = parse_time(f[0], path, line) - 1;
    if (t >= T) {
      throw DataError(path.string() + ":" + std::to_string(line) +
                      ": dimension mismatch, timepoint beyond network range");
    }
    const int i = lookup_node(idx, f[1], path, line);
    const int j = lookup_node(idx, f[2], path, line);
    if (i == j) throw DataError(path.string() + ":" + std::to_string(line) + ": self-dyad covariate");
    auto [it, inserted] = name_index.emplace(f[3], cov.num_covariates());
    if (inserted) {
      cov.names.push_back(f[3]);
      for (int s = 0; s < T; ++s) cov.values[s].push_back(Matrix::Zero(N, N));
      seen.resize(T);
      for (int s = 0; s < T; ++s) seen[s].push_back(Mask::Zero(N, N));
    }
    const int p = it->second;
    if (f[4].empty()) {
      throw DataError(path.string() + ":" + std::to_string(line) + ": covariates may not be missing");
    }
    const double v = csv::parse_double(f[4], path, line);
    if (seen[t][p](i, j)) {
      if (cov.values[t][p](i, j) != v) {
        throw DataError(path.string() + ":" + std::to_string(line) + ": asymmetric covariate '" + f[3] +
                        "' at " + dyad_name(t, f[1], f[2]));
      }
      throw DataError(path.string() + ":" + std::to_string(line) + ": duplicate (t,i,j,p) row");
    }
    seen[t][p](i, j) = seen[t][p](j, i) = 1;
    cov.values[t][p](i, j) = cov.values[t][p](j, i) = v;
  }

  for (int p = 0; p < cov.num_covariates(); ++p) {
    for (int t = 0; t < T; ++t) {
      for (int i = 0; i < N; ++i) {
        for (int j = 0; j < i; ++j) {
          if (avail.dyad(t, i, j) && !seen[t][p](i, j)) {
            throw DataError(path.string() + ": covariate '" + cov.names[p] + "' missing for available dyad " +
                            dyad_name(t, net.nodes[j], net.nodes[i]));
          }
        }
      }
    }
  }
  return cov;
}

Dataset finish_dataset(DynamicNetwork net, const std::optional<std::filesystem::path>& covariate_file,
                       const std::optional<AvailabilityRows>& avail_rows, bool add_intercept) {
  const auto idx = index_nodes(net.nodes);
  Dataset data;
  data.availability = apply_availability(avail_rows, idx, net.num_nodes(), net.num_times());
  data.covariates = covariate_file ? load_covariates(*covariate_file, idx, net, data.availability)
                                   : CovariateTensor::empty(net.num_times());
  if (add_intercept) data.covariates.add_intercept(net.num_nodes());
  net.validate();
  data.covariates.validate(net.num_times(), net.num_nodes());
  classify_missingness(net, data.availability);
  data.network = std::move(net);
  return data;
}

std::optional<AvailabilityRows> read_availability(const std::optional<std::filesystem::path>& path) {
  if (!path) return std::nullopt;
  return AvailabilityRows{csv::read(*path, {"node", "t", "available"}), *path};
}

}  // namespace

// ---------------------------------------------------------------------------

DynamicNetwork DynamicNetwork::all_missing(int num_times, std::vector<std::string> node_labels) {
  DynamicNetwork net;
  net.nodes = std::move(node_labels);
  const int N = net.num_nodes();
  net.times.resize(num_times);
  for (int t = 0; t < num_times; ++t) net.times[t] = t + 1.0;
  net.values.assign(num_times, Matrix::Constant(N, N, kNaN));
  net.observed.assign(num_times, Mask::Zero(N, N));
  return net;
}

void DynamicNetwork::set(int t, int i, int j, double value) {
  values[t](i, j) = values[t](j, i) = value;
  observed[t](i, j) = observed[t](j, i) = 1;
}

void DynamicNetwork::set_missing(int t, int i, int j) {
  values[t](i, j) = values[t](j, i) = kNaN;
  observed[t](i, j) = observed[t](j, i) = 0;
}

void DynamicNetwork::validate() const {
  const int N = num_nodes();
  if (observed.size() != values.size() || times.size() != values.size()) {
    throw DataError("network: inconsistent timepoint counts");
  }
  for (int t = 0; t < num_times(); ++t) {
    if (values[t].rows() != N || values[t].cols() != N || observed[t].rows() != N || observed[t].cols() != N) {
      throw DataError("network: slice " + std::to_string(t + 1) + " is not " + std::to_string(N) + "x" +
                      std::to_string(N));
    }
    for (int i = 0; i < N; ++i) {
      if (observed[t](i, i)) throw DataError("network: diagonal entry observed at " + dyad_name(t, nodes[i], nodes[i]));
      for (int j = 0; j < i; ++j) {
        if (observed[t](i, j) != observed[t](j, i)) {
          throw DataError("network: asymmetric mask at " + dyad_name(t, nodes[i], nodes[j]));
        }
        if (observed[t](i, j) && values[t](i, j) != values[t](j, i)) {
          throw DataError("network: asymmetric value at " + dyad_name(t, nodes[i], nodes[j]));
        }
        if (observed[t](i, j) && !std::isfinite(values[t](i, j))) {
          throw DataError("network: non-finite observed value at " + dyad_name(t, nodes[i], nodes[j]));
        }
      }
    }
  }
}

CovariateTensor CovariateTensor::empty(int num_times) {
  CovariateTensor cov;
  cov.values.resize(num_times);
  return cov;
}

void CovariateTensor::add_intercept(int num_nodes) {
  names.push_back("intercept");
  Matrix ones = Matrix::Ones(num_nodes, num_nodes);
  ones.diagonal().setZero();
  for (auto& slice : values) slice.push_back(ones);
}

void CovariateTensor::validate(int num_times, int num_nodes) const {
  if (static_cast<int>(values.size()) != num_times) {
    throw DataError("covariates: dimension mismatch, expected " + std::to_string(num_times) + " timepoints");
  }
  for (int t = 0; t < num_times; ++t) {
    if (static_cast<int>(values[t].size()) != num_covariates()) {
      throw DataError("covariates: dimension mismatch at t=" + std::to_string(t + 1));
    }
    for (int p = 0; p < num_covariates(); ++p) {
      const Matrix& x = values[t][p];
      if (x.rows() != num_nodes || x.cols() != num_nodes) {
        throw DataError("covariates: dimension mismatch for '" + names[p] + "'");
      }
      if (!x.allFinite()) throw DataError("covariates: non-finite value in '" + names[p] + "'");
      if ((x - x.transpose()).cwiseAbs().maxCoeff() != 0.0) {
        throw DataError("covariates: asymmetric covariate '" + names[p] + "' at t=" + std::to_string(t + 1));
      }
    }
  }
}

AvailabilityMatrix AvailabilityMatrix::all_available(int num_nodes, int num_times) {
  return AvailabilityMatrix{Mask::Ones(num_nodes, num_times)};
}

void AvailabilityMatrix::validate() const {
  for (int n = 0; n < available.rows(); ++n) {
    bool any = false;
    for (int t = 0; t < available.cols(); ++t) {
      if (available(n, t) > 1) throw DataError("availability: entries must be 0 or 1");
      any = any || available(n, t);
    }
    if (!any) throw DataError("availability: node " + std::to_string(n + 1) + " is never available");
  }
}

MissingnessClassification::MissingnessClassification(int num_times, int num_nodes)
    : num_times_(num_times),
      num_nodes_(num_nodes),
      labels_(static_cast<std::size_t>(num_times) * num_nodes * num_nodes, EntryState::kDiagonal) {}

std::size_t MissingnessClassification::count(EntryState s) const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), s));
}

MissingnessClassification classify_missingness(const DynamicNetwork& net, const AvailabilityMatrix& avail) {
  const int T = net.num_times();
  const int N = net.num_nodes();
  if (avail.available.rows() != N || avail.available.cols() != T) {
    throw DataError("availability: dimension mismatch, expected " + std::to_string(N) + " nodes x " +
                    std::to_string(T) + " timepoints");
  }
  MissingnessClassification out(T, N);
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) {
        if (i == j) continue;
        if (!avail(i, t) || !avail(j, t)) {
          if (net.is_observed(t, i, j)) {
            throw DataError("observed value at structurally missing position " +
                            dyad_name(t, net.nodes[i], net.nodes[j]));
          }
          out.set(t, i, j, EntryState::kStructuralMissing);
        } else {
          out.set(t, i, j, net.is_observed(t, i, j) ? EntryState::kObserved : EntryState::kRandomMissing);
        }
      }
    }
  }
  return out;
}

void sort_node_labels(std::vector<std::string>& labels) {
  const bool numeric = std::all_of(labels.begin(), labels.end(), is_integer_label);
  if (numeric) {
    std::sort(labels.begin(), labels.end(),
              [](const std::string& a, const std::string& b) { return std::stol(a) < std::stol(b); });
  } else {
    std::sort(labels.begin(), labels.end());
  }
}

Dataset load_dataset(const std::filesystem::path& network_file,
                     const std::optional<std::filesystem::path>& covariate_file,
                     const std::optional<std::filesystem::path>& availability_file, bool add_intercept) {
  const auto table = csv::read(network_file, {"t", "i", "j", "value"});
  const auto avail_rows = read_availability(availability_file);

  std::set<std::string> label_set;
  int T = 0;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    T = std::max(T, parse_time(f[0], network_file, table.line_numbers[r]));
    label_set.insert(f[1]);
    label_set.insert(f[2]);
  }
  if (avail_rows) {
    for (std::size_t r = 0; r < avail_rows->table.rows.size(); ++r) {
      const auto& f = avail_rows->table.rows[r];
      T = std::max(T, parse_time(f[1], avail_rows->path, avail_rows->table.line_numbers[r]));
      label_set.insert(f[0]);
    }
  }
  if (T == 0 || label_set.size() < 2) throw DataError(network_file.string() + ": no dyads");

  std::vector<std::string> nodes(label_set.begin(), label_set.end());
  sort_node_labels(nodes);
  const auto idx = index_nodes(nodes);
  auto net = DynamicNetwork::all_missing(T, nodes);
  std::vector<Mask> seen(T, Mask::Zero(net.num_nodes(), net.num_nodes()));

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    const auto line = table.line_numbers[r];
    const int t = parse_time(f[0], network_file, line) - 1;
    const int i = idx.at(f[1]);
    const int j = idx.at(f[2]);
    const auto where = network_file.string() + ":" + std::to_string(line);
    if (i == j) throw DataError(where + ": self-tie rows are not allowed");
    const bool missing = f[3].empty();
    const double v = missing ? kNaN : csv::parse_double(f[3], network_file, line);
    if (seen[t](i, j)) {
      const bool same = (missing && !net.is_observed(t, i, j)) ||
                        (!missing && net.is_observed(t, i, j) && net.values[t](i, j) == v);
      if (!same) throw DataError(where + ": conflicting symmetric entries for " + dyad_name(t, f[1], f[2]));
      throw DataError(where + ": duplicate (t,i,j) row for " + dyad_name(t, f[1], f[2]));
    }
    seen[t](i, j) = seen[t](j, i) = 1;
    if (!missing) net.set(t, i, j, v);
  }
  return finish_dataset(std::move(net), covariate_file, avail_rows, add_intercept);
}

Dataset load_dataset_dir(const std::filesystem::path& dir, bool add_intercept) {
  const auto network = dir / "network.csv";
  const auto votes = dir / "votes.csv";
  const auto covariates = dir / "covariates.csv";
  const auto availability = dir / "availability.csv";
  std::optional<std::filesystem::path> cov_path;
  std::optional<std::filesystem::path> avail_path;
  if (std::filesystem::exists(covariates)) cov_path = covariates;
  if (std::filesystem::exists(availability)) avail_path = availability;

  if (std::filesystem::exists(network)) return load_dataset(network, cov_path, avail_path, add_intercept);
  if (std::filesystem::exists(votes)) {
    auto net = build_vote_network(load_votes_csv(votes));
    return finish_dataset(std::move(net), cov_path, read_availability(avail_path), add_intercept);
  }
  throw DataError(dir.string() + ": neither network.csv nor votes.csv found");
}

void write_network_csv(const std::filesystem::path& path, const DynamicNetwork& net) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "t,i,j,value\n";
  for (int t = 0; t < net.num_times(); ++t) {
    for (int i = 0; i < net.num_nodes(); ++i) {
      for (int j = i + 1; j < net.num_nodes(); ++j) {
        out << t + 1 << ',' << net.nodes[i] << ',' << net.nodes[j] << ',';
        if (net.is_observed(t, i, j)) out << csv::format_double(net.values[t](i, j));
        out << '\n';
      }
    }
  }
}

void write_covariates_csv(const std::filesystem::path& path, const DynamicNetwork& net,
                          const CovariateTensor& cov) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "t,i,j,p,value\n";
  for (int t = 0; t < net.num_times(); ++t) {
    for (int p = 0; p < cov.num_covariates(); ++p) {
      for (int i = 0; i < net.num_nodes(); ++i) {
        for (int j = i + 1; j < net.num_nodes(); ++j) {
          out << t + 1 << ',' << net.nodes[i] << ',' << net.nodes[j] << ',' << cov.names[p] << ','
              << csv::format_double(cov.at(t, p)(i, j)) << '\n';
        }
      }
    }
  }
}

void write_availability_csv(const std::filesystem::path& path, const DynamicNetwork& net,
                            const AvailabilityMatrix& avail) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "node,t,available\n";
  for (int n = 0; n < net.num_nodes(); ++n) {
    for (int t = 0; t < net.num_times(); ++t) {
      out << net.nodes[n] << ',' << t + 1 << ',' << static_cast<int>(avail.available(n, t)) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------

Ballot parse_ballot(const std::string& s) {
  if (s == "Y") return Ballot::kYes;
  if (s == "A") return Ballot::kAbstain;
  if (s == "N") return Ballot::kNo;
  if (s == "absent") return Ballot::kAbsent;
  throw DataError("unknown ballot '" + s + "' (expected Y, A, N or absent)");
}

std::optional<double> agreement_index(std::span<const Ballot> ballots_i, std::span<const Ballot> ballots_j) {
  if (ballots_i.size() != ballots_j.size()) {
    throw DataError("agreement_index: ballot slices differ in length");
  }
  double agree = 0.0;
  int joint = 0;
  for (std::size_t v = 0; v < ballots_i.size(); ++v) {
    const Ballot a = ballots_i[v];
    const Ballot b = ballots_j[v];
    if (a == Ballot::kAbsent || b == Ballot::kAbsent) continue;
    ++joint;
    if (a == b) {
      agree += 1.0;
    } else if (a == Ballot::kAbstain || b == Ballot::kAbstain) {
      agree += 0.5;
    }
  }
  if (joint == 0) return std::nullopt;
  return agree / joint;
}

DynamicNetwork build_vote_network(const VoteRecords& records) {
  auto net = DynamicNetwork::all_missing(records.num_times(), records.nodes);
  const int N = records.num_nodes();
  for (int t = 0; t < records.num_times(); ++t) {
    const auto& slice = records.ballots[t];
    if (static_cast<int>(slice.size()) != N) throw DataError("votes: ballot table has wrong node count");
    for (int i = 0; i < N; ++i) {
      for (int j = i + 1; j < N; ++j) {
        if (auto v = agreement_index(slice[i], slice[j])) net.set(t, i, j, *v);
      }
    }
  }
  return net;
}

VoteRecords load_votes_csv(const std::filesystem::path& path) {
  const auto table = csv::read(path, {"t", "vote_id", "node", "ballot"});
  std::set<std::string> label_set;
  int T = 0;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    T = std::max(T, parse_time(table.rows[r][0], path, table.line_numbers[r]));
    label_set.insert(table.rows[r][2]);
  }
  VoteRecords rec;
  rec.nodes.assign(label_set.begin(), label_set.end());
  sort_node_labels(rec.nodes);
  const auto idx = index_nodes(rec.nodes);
  const int N = rec.num_nodes();

  // Vote ids keep their order of first appearance within each timepoint.
  std::vector<std::map<std::string, int>> vote_index(T);
  std::vector<std::vector<std::string>> vote_order(T);
  for (const auto& row : table.rows) {
    const int t = std::stoi(row[0]) - 1;
    if (vote_index[t].emplace(row[1], static_cast<int>(vote_order[t].size())).second) {
      vote_order[t].push_back(row[1]);
    }
  }
  rec.ballots.resize(T);
  for (int t = 0; t < T; ++t) {
    if (vote_order[t].empty()) {
      throw DataError(path.string() + ": timepoint " + std::to_string(t + 1) + " has no votes");
    }
    rec.ballots[t].assign(N, std::vector<Ballot>(vote_order[t].size(), Ballot::kAbsent));
  }
  std::vector<std::set<std::pair<int, int>>> seen(T);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    const auto line = table.line_numbers[r];
    const int t = std::stoi(f[0]) - 1;
    const int v = vote_index[t].at(f[1]);
    const int n = idx.at(f[2]);
    if (!seen[t].emplace(v, n).second) {
      throw DataError(path.string() + ":" + std::to_string(line) + ": duplicate ballot for node " + f[2]);
    }
    try {
      rec.ballots[t][n][v] = parse_ballot(f[3]);
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
  }
  return rec;
}

}  // namespace dame
