#include "plodd/cache.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "plodd/errors.hpp"
#include "plodd/filter.hpp"
#include "plodd/io.hpp"

namespace plodd {

namespace {

constexpr int kFormatVersion = 1;
// Recomputed residuals may differ from the stored one by rounding.
constexpr double kRevalidationSlack = 10.0;

}  // namespace

const char* tool_version() { return PLODD_VERSION; }

std::string alpha_key(double alpha) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.11e", alpha);
  return buffer;
}

SequenceCache::SequenceCache(std::filesystem::path directory)
    : directory_(std::move(directory)) {}

std::filesystem::path SequenceCache::entry_path(int n, double alpha) const {
  return directory_ / ("plodd_n" + std::to_string(n) + "_a" + alpha_key(alpha) + ".json");
}

std::optional<OptimizedSequence> SequenceCache::load(int n, double alpha,
                                                     const SolverOptions& options,
                                                     std::string* rejection) const {
  const std::filesystem::path path = entry_path(n, alpha);
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  auto reject = [&](const std::string& why) -> std::optional<OptimizedSequence> {
    if (rejection) *rejection = path.string() + ": " + why;
    return std::nullopt;
  };
  try {
    const Json entry = read_json_file(path);
    if (entry.value("format", 0) != kFormatVersion) return reject("unknown format");
    const Json& key = entry.at("key");
    if (key.at("family") != "plodd" || key.at("n") != n ||
        key.at("alpha") != alpha_key(alpha)) {
      return reject("key mismatch");
    }
    OptimizedSequence result = optimized_from_json(entry.at("sequence"));
    if (result.sequence.size() != n || result.sequence.family().family != Family::Plodd) {
      return reject("payload does not match its key");
    }
    if (alpha_key(result.provenance.alpha) != alpha_key(alpha)) {
      return reject("payload exponent does not match its key");
    }
    if (!is_symmetric(result.sequence, 1e-12)) return reject("payload is not symmetric");
    const SpectrumExponent ex(alpha);
    for (int p = 1; p <= ex.constraint_count(); ++p) {
      if (std::abs(moment_sum(result.sequence, p)) > options.tolerance) {
        return reject("moment constraint p=" + std::to_string(p) + " fails");
      }
    }
    const PloddProblem problem = plodd_problem(n, ex, options);
    const double residual = kkt_residual_norm(problem, result.kkt);
    if (!(residual <= kRevalidationSlack * options.tolerance)) {
      return reject("KKT residual " + std::to_string(residual) + " exceeds tolerance");
    }
    return result;
  } catch (const std::exception& e) {
    return reject(e.what());
  }
}

void SequenceCache::store(const OptimizedSequence& result,
                          const SolverOptions& options) const {
  std::error_code ec;
  std::filesystem::create_directories(directory_, ec);
  if (ec) throw IoError("cannot create cache directory " + directory_.string() + ": " + ec.message());
  Json entry;
  entry["format"] = kFormatVersion;
  entry["key"] = {{"family", "plodd"},
                  {"n", result.sequence.size()},
                  {"alpha", alpha_key(result.provenance.alpha)}};
  entry["tool_version"] = tool_version();
  entry["solver"] = {{"residual", result.kkt.residual_norm},
                     {"iterations", result.kkt.iterations},
                     {"tolerance", options.tolerance}};
  entry["sequence"] = optimized_to_json(result);
  write_text_file_atomic(entry_path(result.sequence.size(), result.provenance.alpha),
                         entry.dump(2) + "\n");
}

CachedSolve solve_cached(const SequenceCache& cache, const PloddProblem& problem) {
  CachedSolve out;
  const double alpha = problem.exponent.alpha();
  if (auto hit = cache.load(problem.n, alpha, problem.options, &out.rejection)) {
    out.result = std::move(*hit);
    out.hit = true;
    return out;
  }
  out.result = optimize_plodd(problem);
  cache.store(out.result, problem.options);
  return out;
}

std::filesystem::path resolve_cache_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("PLODD_CACHE_DIR"); env && *env) return env;
  return "plodd-cache";
}

}  // namespace plodd
