#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "plodd/optimizer.hpp"

namespace plodd {

/// Exponent folded to 12 significant digits, the cache key component.
std::string alpha_key(double alpha);

/// On-disk store of optimized PLODD sequences keyed by (family, n, alpha).
/// Entries are written atomically and fully revalidated on load: ordering,
/// symmetry, the moment constraints and the KKT residual are recomputed, so
/// an edited payload is never served.
class SequenceCache {
 public:
  explicit SequenceCache(std::filesystem::path directory);

  const std::filesystem::path& directory() const { return directory_; }
  std::filesystem::path entry_path(int n, double alpha) const;

  /// nullopt on a miss. A present but invalid entry is also a miss; the
  /// reason is stored in `rejection` when given.
  std::optional<OptimizedSequence> load(int n, double alpha,
                                        const SolverOptions& options = {},
                                        std::string* rejection = nullptr) const;

  void store(const OptimizedSequence& result, const SolverOptions& options = {}) const;

 private:
  std::filesystem::path directory_;
};

struct CachedSolve {
  OptimizedSequence result;
  bool hit = false;
  std::string rejection;  // why an existing entry was discarded
};

/// Cache lookup, then optimize_plodd and store on a miss.
CachedSolve solve_cached(const SequenceCache& cache, const PloddProblem& problem);

/// Directory resolution: explicit flag, then PLODD_CACHE_DIR, then
/// ./plodd-cache.
std::filesystem::path resolve_cache_dir(const std::string& flag_value);

const char* tool_version();

}  // namespace plodd
