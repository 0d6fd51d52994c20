#pragma once

#include <string>
#include <vector>

namespace semicomp {

/// One subject: intermediate times T_k = min(T~_k, D, C) with indicators,
/// terminal time Y = min(D, C) and its indicator.
struct ObservedRecord {
  std::string id;
  std::vector<double> t;
  std::vector<int> delta;
  double y = 0.0;
  int dtilde = 0;

  int d() const {
    int s = 0;
    for (int x : delta) s += x;
    return s;
  }
  int K() const { return static_cast<int>(t.size()); }
  bool operator==(const ObservedRecord&) const = default;
};

struct Dataset {
  int K = 0;
  std::vector<ObservedRecord> records;

  std::size_t size() const { return records.size(); }
  bool operator==(const Dataset&) const = default;
};

/// Throws Parse errors naming the offending record (0-based position).
void validate_dataset(const Dataset& data);

Dataset subset(const Dataset& data, const std::vector<std::size_t>& index);

}  // namespace semicomp
