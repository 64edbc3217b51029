#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dame {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Mask = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// T stacked symmetric N x N relational matrices with an observation mask.
///
/// Missing entries (including the whole diagonal) hold NaN in `values` and 0 in
/// `observed`. Values stored at missing positions are never read by the model,
/// so callers may leave anything there.
struct DynamicNetwork {
  std::vector<std::string> nodes;
  std::vector<double> times;  // timestamps used by the GP kernel; default 1..T
  std::vector<Matrix> values;
  std::vector<Mask> observed;

  static DynamicNetwork all_missing(int num_times, std::vector<std::string> node_labels);

  int num_times() const { return static_cast<int>(values.size()); }
  int num_nodes() const { return static_cast<int>(nodes.size()); }

  bool is_observed(int t, int i, int j) const { return observed[t](i, j) != 0; }
  void set(int t, int i, int j, double value);
  void set_missing(int t, int i, int j);

  /// Throws DataError when a symmetry or diagonal invariant is broken.
  void validate() const;
};

/// Observed dyadic covariates X, indexed [t][p], each N x N symmetric.
struct CovariateTensor {
  std::vector<std::string> names;
  std::vector<std::vector<Matrix>> values;

  static CovariateTensor empty(int num_times);

  int num_covariates() const { return static_cast<int>(names.size()); }
  const Matrix& at(int t, int p) const { return values[t][p]; }

  /// Appends a covariate named "intercept" that is 1 on every off-diagonal dyad.
  void add_intercept(int num_nodes);
  void validate(int num_times, int num_nodes) const;
};

/// N x T availability indicators A_nt.
struct AvailabilityMatrix {
  Mask available;

  static AvailabilityMatrix all_available(int num_nodes, int num_times);

  bool operator()(int node, int t) const { return available(node, t) != 0; }
  /// Dyad (i, j) at time t enters the likelihood only if both endpoints are available.
  bool dyad(int t, int i, int j) const { return i != j && available(i, t) && available(j, t); }
  void validate() const;
};

enum class EntryState : std::uint8_t { kObserved, kRandomMissing, kStructuralMissing, kDiagonal };

/// Per-entry partition of all (t, i, j) positions.
class MissingnessClassification {
 public:
  MissingnessClassification(int num_times, int num_nodes);

  EntryState at(int t, int i, int j) const { return labels_[index(t, i, j)]; }
  void set(int t, int i, int j, EntryState s) { labels_[index(t, i, j)] = s; }

  int num_times() const { return num_times_; }
  int num_nodes() const { return num_nodes_; }
  std::size_t count(EntryState s) const;

 private:
  std::size_t index(int t, int i, int j) const {
    return (static_cast<std::size_t>(t) * num_nodes_ + i) * num_nodes_ + j;
  }
  int num_times_;
  int num_nodes_;
  std::vector<EntryState> labels_;
};

struct Dataset {
  DynamicNetwork network;
  CovariateTensor covariates;
  AvailabilityMatrix availability;
};

/// Observed entries at positions where A says a node is absent are rejected.
MissingnessClassification classify_missingness(const DynamicNetwork& net,
                                               const AvailabilityMatrix& avail);

/// Reads the long-format CSV files. `covariate_file` and `availability_file`
/// are optional; a missing availability file means every node is available.
Dataset load_dataset(const std::filesystem::path& network_file,
                     const std::optional<std::filesystem::path>& covariate_file,
                     const std::optional<std::filesystem::path>& availability_file,
                     bool add_intercept = false);

/// Loads `network.csv` (or `votes.csv` when no network file exists),
/// `covariates.csv` and `availability.csv` from a directory.
Dataset load_dataset_dir(const std::filesystem::path& dir, bool add_intercept = false);

void write_network_csv(const std::filesystem::path& path, const DynamicNetwork& net);
void write_covariates_csv(const std::filesystem::path& path, const DynamicNetwork& net,
                          const CovariateTensor& cov);
void write_availability_csv(const std::filesystem::path& path, const DynamicNetwork& net,
                            const AvailabilityMatrix& avail);

// ---------------------------------------------------------------------------
// Vote records and agreement networks

enum class Ballot : std::uint8_t { kYes, kAbstain, kNo, kAbsent };

Ballot parse_ballot(const std::string& s);

/// Ballots indexed [t][node][vote]; every node has one ballot per vote at t.
struct VoteRecords {
  std::vector<std::string> nodes;
  std::vector<std::vector<std::vector<Ballot>>> ballots;

  int num_times() const { return static_cast<int>(ballots.size()); }
  int num_nodes() const { return static_cast<int>(nodes.size()); }
};

/// Share of jointly cast votes on which i and j agree. An abstention against
/// a yes or no counts one half; two abstentions agree fully. Votes where either
/// side is absent are dropped. Returns nullopt with no joint participation.
std::optional<double> agreement_index(std::span<const Ballot> ballots_i,
                                      std::span<const Ballot> ballots_j);

DynamicNetwork build_vote_network(const VoteRecords& records);

/// Reads `t,vote_id,node,ballot`; (vote, node) pairs without a row are absent.
VoteRecords load_votes_csv(const std::filesystem::path& path);

/// Canonical node order: numeric when every label is an integer, otherwise lexicographic.
void sort_node_labels(std::vector<std::string>& labels);

}  // namespace dame
