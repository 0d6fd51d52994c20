#include "semicomp/records.hpp"

#include <cmath>

#include "semicomp/errors.hpp"

namespace semicomp {

void validate_dataset(const Dataset& data) {
  if (data.K < 1) throw Error(ErrorCode::Parse, "K must be >= 1");
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    const auto& r = data.records[i];
    auto fail = [&](const std::string& what) {
      throw Error(ErrorCode::Parse, "record " + std::to_string(i) + " (id " + r.id + "): " + what);
    };
    if (r.K() != data.K || static_cast<int>(r.delta.size()) != data.K) fail("wrong number of event columns");
    if (!std::isfinite(r.y) || r.y < 0.0) fail("y must be finite and >= 0");
    if (r.dtilde != 0 && r.dtilde != 1) fail("dtilde must be 0 or 1");
    for (int k = 0; k < data.K; ++k) {
      if (r.delta[k] != 0 && r.delta[k] != 1) fail("d" + std::to_string(k + 1) + " must be 0 or 1");
      if (!std::isfinite(r.t[k]) || r.t[k] < 0.0) fail("t" + std::to_string(k + 1) + " must be finite and >= 0");
      if (r.t[k] > r.y) fail("t" + std::to_string(k + 1) + " exceeds y");
    }
  }
}

Dataset subset(const Dataset& data, const std::vector<std::size_t>& index) {
  Dataset out;
  out.K = data.K;
  out.records.reserve(index.size());
  for (std::size_t i : index) out.records.push_back(data.records.at(i));
  return out;
}

}  // namespace semicomp
