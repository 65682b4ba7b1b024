#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "omnimatte/model.hpp"

namespace omnimatte {

struct GradCheckRow {
  std::string term;
  bool skipped = false;
  double max_rel_err = 0.0;  // over every parameter element
  std::string worst_tensor;
};

struct GradCheckReport {
  std::vector<GradCheckRow> rows;
  double fd_step = 1e-4;
  double worst() const {
    double w = 0.0;
    for (const auto& r : rows)
      if (!r.skipped && r.max_rel_err > w) w = r.max_rel_err;
    return w;
  }
  bool pass(double tol = 1e-4) const { return worst() <= tol; }
};

struct GradCheckOptions {
  int width = 16, height = 24;
  int frames = 4, layers = 1;
  std::uint64_t seed = 1234;
  double fd_step = 1e-4;
  bool include_photo = true;
};

// Compares every term's reverse-mode gradient against central finite
// differences over every parameter element of a random small instance.
// Relative error uses a 1e-8 absolute floor on the difference.
GradCheckReport gradcheck(const GradCheckOptions& options);

std::string format_report(const GradCheckReport& report);

}  // namespace omnimatte
