#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "semicomp/copula.hpp"
#include "semicomp/records.hpp"

namespace semicomp {

struct SimConfig {
  int K = 3;
  Family family = Family::Frank;
  double tau_alpha = 0.2;
  std::vector<double> tau_thetas;           // upper wedge, one per event
  std::optional<double> tau_lower;          // lower-wedge tau shared by all events
  double rate_k = 1.0;                      // exponential S_k
  double rate_d = 0.6;                      // exponential S_D
  double cens_max = 20.0;                   // C ~ Uniform[0, cens_max]
  int n_train = 100;
  int n_test = 0;
  std::uint64_t seed = 1;

  void validate() const;  // throws Config errors naming the offending key
};

SimConfig preset_ex1(int K, double tau_alpha, double cens_max);
SimConfig preset_ex2(int K, double tau_alpha, double cens_max);
SimConfig preset_ex3(double tau_lower, double tau_alpha);

/// Latent quantities per subject; +inf marks an intermediate event past the
/// inversion bracket.
struct LatentTruth {
  std::vector<double> d;
  std::vector<double> c;
  std::vector<std::vector<double>> t;  // [subject][k]
};

struct SimResult {
  Dataset train, test;
  LatentTruth train_latent, test_latent;
};

/// Draws one subject; index is the global subject counter used for seeding.
struct SimSubject {
  double d = 0.0, c = 0.0;
  std::vector<double> t_latent;
  ObservedRecord record;
};
SimSubject simulate_subject(const SimConfig& cfg, std::uint64_t index);

SimResult simulate_dataset(const SimConfig& cfg, int threads = 1);

/// Sample Kendall tau-b for every pair of columns.
std::vector<std::vector<double>> pairwise_kendall(const std::vector<std::vector<double>>& columns);
double kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace semicomp
