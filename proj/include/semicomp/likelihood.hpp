#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semicomp/copula.hpp"
#include "semicomp/records.hpp"
#include "semicomp/step_survival.hpp"

namespace semicomp {

/// Stage-one plug-ins held fixed while the global association is profiled.
struct MarginalPieces {
  Family family = Family::Frank;
  std::vector<ArchimedeanCopula> thetas;  // one per intermediate event
  std::vector<StepSurvival> marginals;    // S_k
  StepSurvival terminal;                  // S_D
  int K() const { return static_cast<int>(thetas.size()); }
};

enum class InnerMode { Exact, MonteCarlo };

struct McConfig {
  int n = 500;
  std::uint64_t seed = 20240601;
  InnerMode mode = InnerMode::Exact;
};

/// Point mass of the terminal-time distribution. v is the representative
/// survival value used inside the copula; the tail atom carries the mass the
/// estimator leaves beyond its last jump and lies after every observed time.
struct Atom {
  double time = 0.0;
  double mass = 0.0;
  double v = 0.0;
  bool tail = false;
};

std::vector<Atom> terminal_atoms(const StepSurvival& S_D);

/// Shared frailty uniforms for common random numbers.
struct FrailtyDraws {
  std::vector<double> u1, u2;
  static FrailtyDraws make(const McConfig& mc);
};

/// Frailty values at a given alpha, mapped from the shared uniforms.
struct FrailtyValues {
  std::vector<double> v, log_v;
  static FrailtyValues at(const ArchimedeanCopula& alpha, const FrailtyDraws& draws);
};

/// Alpha-free pieces of one record's contribution.
struct RecordCache {
  bool dead = false;
  bool valid = true;
  int d = 0;                 // observed intermediates
  int nc = 0;                // censored intermediates
  std::vector<double> log_w;      // per atom: log mass + sum log(-G')
  std::vector<double> g_event;    // atom-major, d per atom: G_k(T_k; y)
  std::vector<double> g_lower;    // atom-major, nc per atom: G_k(T_k; y), censored k
  std::vector<double> g_upper;    // atom-major, nc per atom: G_k(y; y), censored k
  std::size_t atoms() const { return log_w.size(); }
};

RecordCache build_record_cache(const ObservedRecord& r, const MarginalPieces& pieces,
                               const std::vector<Atom>& atoms);

/// Record contribution with the death observed.
double loglik_death_observed(const ObservedRecord& r, const ArchimedeanCopula& alpha,
                             const MarginalPieces& pieces);

/// log J^s for a subject alive at Y; s is a bit mask over the subject's
/// censored intermediates (bit i = i-th censored index in increasing k).
double log_j_term(const ObservedRecord& r, unsigned s, const ArchimedeanCopula& alpha,
                  const MarginalPieces& pieces, const McConfig& mc);

/// log of the alive contribution. Exact mode uses the closed telescoped sum;
/// Monte Carlo mode evaluates all subset terms jointly over shared draws.
double loglik_alive(const ObservedRecord& r, const ArchimedeanCopula& alpha, const MarginalPieces& pieces,
                    const McConfig& mc);

/// Reference implementation: log of the sum of separately computed J^s terms.
double loglik_alive_enumerated(const ObservedRecord& r, const ArchimedeanCopula& alpha,
                               const MarginalPieces& pieces, const McConfig& mc);

struct LoglikDiagnostics {
  std::size_t skipped = 0;
  std::vector<std::string> skipped_ids;
};

/// Precomputed caches for the whole sample; evaluating at a new alpha only
/// touches the alpha-dependent generator terms.
class LikelihoodWorkspace {
 public:
  LikelihoodWorkspace(const Dataset& data, const MarginalPieces& pieces, const McConfig& mc);
  double profile_loglik(const ArchimedeanCopula& alpha, int threads = 1) const;
  const LoglikDiagnostics& diagnostics() const { return diag_; }

 private:
  std::vector<RecordCache> cache_;
  McConfig mc_;
  FrailtyDraws draws_;
  LoglikDiagnostics diag_;
};

double profile_loglik(const ArchimedeanCopula& alpha, const MarginalPieces& pieces, const Dataset& data,
                      const McConfig& mc);

// Evaluators shared by the cache-based and record-level entry points.
double eval_cache_exact(const RecordCache& c, const ArchimedeanCopula& alpha);
double eval_cache_mc(const RecordCache& c, const ArchimedeanCopula& alpha, const FrailtyValues& fv);
double eval_cache_j_term(const RecordCache& c, unsigned s, const ArchimedeanCopula& alpha, InnerMode mode,
                         const FrailtyValues& fv);

}  // namespace semicomp
