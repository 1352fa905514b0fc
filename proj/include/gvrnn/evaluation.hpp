#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gvrnn/graph.hpp"

namespace gvrnn::eval {

/// Masses on an integer support 0, 1, 2, ...; the ground distance between
/// bins i and j is |i - j|. Degree histograms index by degree, binned
/// statistics by bin.
struct StatHistogram {
  std::vector<double> mass;
};

inline constexpr int kClusteringBins = 100;
inline constexpr int kOrbits = 15;
using OrbitVector = std::array<std::int64_t, kOrbits>;

StatHistogram degree_histogram(const Graph& g);

/// Local clustering coefficient per node (0 when degree < 2).
std::vector<double> clustering_coefficients(const Graph& g);
/// Coefficient c falls in bin min(floor(100 c), 99); computed on the exact
/// triangle/pair ratio so that 0.29 lands in bin 29.
StatHistogram clustering_histogram(const Graph& g);

/// Per-node counts of the 15 orbits of connected graphlets on 2 to 4 nodes:
///   0 edge; 1, 2 path P3 end / middle; 3 triangle; 4, 5 path P4 end / inner;
///   6, 7 star leaf / center; 8 cycle C4; 9, 10, 11 paw tail / degree-2 /
///   degree-3; 12, 13 diamond degree-2 / degree-3; 14 clique K4.
/// Non-induced counts from degrees and common neighbors, then the overlap
/// between graphlets is removed top down.
std::vector<OrbitVector> orbit_counts(const Graph& g);

/// Mean orbit vector of each graph, every component min-max scaled over
/// the union of both sets, as a 15-bin histogram.
std::pair<std::vector<StatHistogram>, std::vector<StatHistogram>> orbit_histograms(const std::vector<Graph>& a,
                                                                                    const std::vector<Graph>& b);

/// L1 distance between cumulative sums over the shared support (the first
/// Wasserstein distance for normalized histograms).
double wasserstein_1(const StatHistogram& a, const StatHistogram& b);
double gaussian_emd_kernel(const StatHistogram& a, const StatHistogram& b, double sigma);

/// Kernel matrix between two sets, rows parallelized over `a`.
std::vector<double> kernel_matrix(const std::vector<StatHistogram>& a, const std::vector<StatHistogram>& b, double sigma);
std::vector<double> kernel_matrix_serial(const std::vector<StatHistogram>& a, const std::vector<StatHistogram>& b,
                                         double sigma);

/// Biased squared MMD, clamped at 0. Each kernel mean is summed in sorted
/// order, so mmd(A, B) == mmd(B, A) and mmd(A, A) == 0 exactly.
double mmd(const std::vector<StatHistogram>& a, const std::vector<StatHistogram>& b, double sigma);

/// W1 between two empirical distributions.
double emd_1d(std::vector<double> a, std::vector<double> b);

/// Two-way split maximizing modularity: sign of the leading eigenvector of
/// the modularity matrix, refined by single-node moves. Returns 0/1 per node.
std::vector<int> modularity_bisection(const Graph& g);
double modularity(const Graph& g, const std::vector<int>& part);

/// Attribute values per community, for density plots and per-community EMD.
struct AttributeSamples {
  std::array<std::vector<double>, 2> generated;
  std::array<std::vector<double>, 2> test;
  std::vector<double> generated_all;
  std::vector<double> test_all;
};

/// Test nodes go by their labels. Generated nodes go by their labels when
/// present, otherwise by modularity bisection, each part matched to the
/// test community whose mean attribute is nearest.
AttributeSamples attribute_samples(const std::vector<Graph>& generated, const std::vector<Graph>& test);

struct MmdReport {
  double degree_mmd = 0.0;
  double clustering_mmd = 0.0;
  double orbit_mmd = 0.0;
  std::optional<double> emd_all;
  std::optional<double> emd_com1;
  std::optional<double> emd_com2;
  std::size_t generated_count = 0;
  std::size_t test_count = 0;
  double sigma = 1.0;
  nlohmann::json provenance = nlohmann::json::object();
  std::optional<AttributeSamples> samples;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

MmdReport evaluate(const std::vector<Graph>& generated, const std::vector<Graph>& test, double sigma = 1.0);

/// Columns: source (generated|test), community (1|2|all), value.
void write_density_tsv(const AttributeSamples& samples, const std::filesystem::path& path);

}  // namespace gvrnn::eval
