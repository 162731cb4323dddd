#pragma once

namespace batdiff {

enum class Boundary {
  kMirror,    // reflect about the edge sample, edge not repeated: -1 -> 1
  kPeriodic,
};

/// Maps an arbitrary integer coordinate into [0, n). Mirror folding repeats
/// with period 2n-2, so supports wider than the signal are handled.
inline int fold_index(int i, int n, Boundary mode) {
  if (n == 1) return 0;
  if (mode == Boundary::kPeriodic) {
    int r = i % n;
    return r < 0 ? r + n : r;
  }
  const int period = 2 * n - 2;
  int r = i % period;
  if (r < 0) r += period;
  return r < n ? r : period - r;
}

}  // namespace batdiff
