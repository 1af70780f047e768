#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "plodd/cache.hpp"
#include "plodd/errors.hpp"
#include "plodd/io.hpp"
#include "plodd/spectral.hpp"
#include "support.hpp"

using namespace plodd;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("plodd_io_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

}  // namespace

TEST(SequenceJson, RoundTripIsBitIdentical) {
  for (const PulseSequence& seq : {make_udd(7), make_cpmg(4), make_cdd(3), make_custom({0.123456789, 0.7})}) {
    const Json j = sequence_to_json(seq);
    const PulseSequence back = sequence_from_json(Json::parse(j.dump()));
    EXPECT_EQ(support::instants_of(back), support::instants_of(seq));
    EXPECT_EQ(back.family().family, seq.family().family);
    EXPECT_EQ(spectral_prefactor(back, SpectrumExponent(1.5)).value,
              spectral_prefactor(seq, SpectrumExponent(1.5)).value);
  }
}

TEST(SequenceJson, Layout) {
  const Json j = sequence_to_json(make_udd(2));
  EXPECT_EQ(j["family"], "udd");
  EXPECT_EQ(j["n"], 2);
  EXPECT_EQ(j["instants"][0].get<double>(), 0.25);
  EXPECT_EQ(j["parameters"]["n"], 2);
  EXPECT_EQ(sequence_to_json(make_cdd(3))["parameters"]["level"], 3);
}

TEST(SequenceJson, MalformedInputRejected) {
  EXPECT_THROW(sequence_from_json(Json::parse(R"({"n": 2})")), ValidationError);
  EXPECT_THROW(sequence_from_json(Json::parse(R"({"family": "udd", "n": 3, "instants": [0.2, 0.5]})")),
               ValidationError);
  EXPECT_THROW(sequence_from_json(Json::parse(R"({"family": "custom", "n": 2, "instants": [0.5, 0.4]})")),
               ValidationError);
  EXPECT_THROW(sequence_from_json(Json::parse(R"({"family": "xy8", "n": 1, "instants": [0.5]})")),
               ValidationError);
  EXPECT_THROW(sequence_from_json(Json::parse(R"({"family": "udd", "n": 1, "instants": ["a"]})")),
               ValidationError);
}

TEST(OptimizedJson, RoundTrip) {
  const OptimizedSequence r = optimize_plodd(plodd_problem(8, SpectrumExponent(4.5)));
  const Json j = optimized_to_json(r);
  EXPECT_EQ(j["family"], "plodd");
  EXPECT_EQ(j["alpha"].get<double>(), 4.5);
  EXPECT_EQ(j["prefactor"].get<double>(), r.prefactor.value);
  EXPECT_TRUE(j.contains("kkt_residual"));
  EXPECT_EQ(j["multipliers"].size(), r.kkt.multipliers.size());
  const OptimizedSequence back = optimized_from_json(Json::parse(j.dump()));
  EXPECT_EQ(support::instants_of(back.sequence), support::instants_of(r.sequence));
  EXPECT_EQ(back.prefactor.value, r.prefactor.value);
  EXPECT_EQ(back.kkt.multipliers, r.kkt.multipliers);
  EXPECT_EQ(back.kkt.iterations, r.kkt.iterations);
  EXPECT_EQ(back.provenance.alpha, 4.5);
}

TEST_F(TempDir, AtomicWriteAndRead) {
  const fs::path file = dir_ / "a.json";
  write_text_file_atomic(file, "{\"x\": 1}\n");
  EXPECT_EQ(read_text_file(file), "{\"x\": 1}\n");
  EXPECT_EQ(read_json_file(file)["x"], 1);
  write_text_file_atomic(file, "[]\n");
  EXPECT_EQ(read_text_file(file), "[]\n");
  std::size_t count = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir_)) ++count;
  EXPECT_EQ(count, 1u);
}

TEST_F(TempDir, IoErrors) {
  EXPECT_THROW(read_text_file(dir_ / "missing.json"), IoError);
  write_text_file_atomic(dir_ / "bad.json", "{not json");
  EXPECT_THROW(read_json_file(dir_ / "bad.json"), IoError);
  EXPECT_THROW(write_text_file_atomic(dir_ / "no" / "such" / "dir.json", "x"), IoError);
}

TEST(Cache, AlphaKeyRoundsToTwelveDigits) {
  EXPECT_EQ(alpha_key(4.0), alpha_key(4.0 + 1e-13));
  EXPECT_NE(alpha_key(4.0), alpha_key(4.0 + 1e-9));
  EXPECT_EQ(alpha_key(2.5), "2.50000000000e+00");
}

TEST_F(TempDir, CacheMissThenHit) {
  const SequenceCache cache(dir_);
  const PloddProblem problem = plodd_problem(10, SpectrumExponent(4.0));
  const CachedSolve first = solve_cached(cache, problem);
  EXPECT_FALSE(first.hit);
  EXPECT_TRUE(fs::exists(cache.entry_path(10, 4.0)));
  const CachedSolve second = solve_cached(cache, problem);
  EXPECT_TRUE(second.hit);
  EXPECT_EQ(support::instants_of(second.result.sequence), support::instants_of(first.result.sequence));
  EXPECT_EQ(second.result.prefactor.value, first.result.prefactor.value);
  EXPECT_EQ(second.result.kkt.residual_norm, first.result.kkt.residual_norm);
  const Json payload = read_json_file(cache.entry_path(10, 4.0));
  EXPECT_EQ(payload["key"]["family"], "plodd");
  EXPECT_EQ(payload["tool_version"], tool_version());
}

TEST_F(TempDir, TamperedPayloadIsRecomputed) {
  const SequenceCache cache(dir_);
  const PloddProblem problem = plodd_problem(10, SpectrumExponent(4.0));
  const CachedSolve first = solve_cached(cache, problem);
  Json payload = read_json_file(cache.entry_path(10, 4.0));
  payload["sequence"]["instants"][0] = payload["sequence"]["instants"][0].get<double>() + 1e-3;
  write_text_file_atomic(cache.entry_path(10, 4.0), payload.dump(2));
  std::string why;
  EXPECT_FALSE(cache.load(10, 4.0, {}, &why).has_value());
  EXPECT_FALSE(why.empty());
  const CachedSolve again = solve_cached(cache, problem);
  EXPECT_FALSE(again.hit);
  EXPECT_FALSE(again.rejection.empty());
  EXPECT_EQ(support::instants_of(again.result.sequence), support::instants_of(first.result.sequence));
  EXPECT_TRUE(solve_cached(cache, problem).hit);
}

TEST_F(TempDir, KeyMismatchIsAMiss) {
  const SequenceCache cache(dir_);
  solve_cached(cache, plodd_problem(6, SpectrumExponent(3.0)));
  fs::copy_file(cache.entry_path(6, 3.0), cache.entry_path(6, 3.5));
  std::string why;
  EXPECT_FALSE(cache.load(6, 3.5, {}, &why).has_value());
  EXPECT_FALSE(why.empty());
  write_text_file_atomic(cache.entry_path(8, 3.0), "garbage");
  EXPECT_FALSE(cache.load(8, 3.0, {}, &why).has_value());
}

TEST(Cache, DirectoryResolution) {
  EXPECT_EQ(resolve_cache_dir("explicit"), fs::path("explicit"));
  ::setenv("PLODD_CACHE_DIR", "/tmp/from-env", 1);
  EXPECT_EQ(resolve_cache_dir(""), fs::path("/tmp/from-env"));
  EXPECT_EQ(resolve_cache_dir("flag"), fs::path("flag"));
  ::unsetenv("PLODD_CACHE_DIR");
  EXPECT_EQ(resolve_cache_dir(""), fs::path("plodd-cache"));
}
