#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "config.hpp"
#include "srtn_io.hpp"
#include "tensor.hpp"

using namespace srnet;

TEST_CASE("tensor shape and data length must agree") {
  CHECK_NOTHROW(Tensor<float>({2, 3}, std::vector<float>(6, 1.f)));
  CHECK_THROWS_AS(Tensor<float>({2, 3}, std::vector<float>(5, 1.f)), Error);
  CHECK_THROWS_AS(Tensor<float>({0, 3}), Error);
  CHECK_THROWS_AS(Tensor<float>({2, 3, 4, 5, 6}), Error);
}

TEST_CASE("row-major indexing") {
  Tensor<float> t({2, 3, 2});
  float v = 0.f;
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = v++;
  CHECK(t.at(0, 0, 0) == 0.f);
  CHECK(t.at(0, 0, 1) == 1.f);
  CHECK(t.at(0, 1, 0) == 2.f);
  CHECK(t.at(1, 0, 0) == 6.f);
  CHECK(t.at(1, 2, 1) == 11.f);
}

TEST_CASE("reshape preserves data and rejects bad element counts") {
  Tensor<double> t({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor<double> r = reshape(t, {6});
  CHECK(r.at(4) == 5.0);
  CHECK_THROWS_AS(reshape(t, {4}), Error);
}

TEST_CASE("srtn round trip, f32 and f64") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "srtn_test";
  fs::create_directories(dir);

  Rng rng(7);
  Tensor<float> a = random_uniform<float>({3, 4, 2}, rng, -2.f, 2.f);
  write_srtn((dir / "a.srtn").string(), a);
  Tensor<float> a2 = read_srtn<float>((dir / "a.srtn").string());
  REQUIRE(a2.shape() == a.shape());
  for (int64_t i = 0; i < a.numel(); ++i) CHECK(a2[i] == a[i]);

  Tensor<double> b = random_uniform<double>({2, 2}, rng, -1.0, 1.0);
  write_srtn((dir / "b.srtn").string(), b);
  Tensor<double> b2 = read_srtn<double>((dir / "b.srtn").string());
  for (int64_t i = 0; i < b.numel(); ++i) CHECK(b2[i] == b[i]);

  // f32 file read back as f64 converts losslessly
  Tensor<double> a64 = read_srtn<double>((dir / "a.srtn").string());
  for (int64_t i = 0; i < a.numel(); ++i)
    CHECK(a64[i] == static_cast<double>(a[i]));

  fs::remove_all(dir);
}

TEST_CASE("srtn rejects corrupt headers") {
  namespace fs = std::filesystem;
  const fs::path p = fs::temp_directory_path() / "bad.srtn";
  {
    std::FILE* f = std::fopen(p.string().c_str(), "wb");
    std::fputs("NOPE", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(read_srtn<float>(p.string()), Error);
  fs::remove(p);
}

TEST_CASE("kv config parses dotted keys, comments, and types") {
  KvConfig cfg = KvConfig::from_string(
      "# run settings\n"
      "ptm.rounds = 3\n"
      "train.lr = 0.5  # inline comment\n"
      "ptm.gate_with_initial = false\n"
      "name = tiny run\n");
  CHECK(cfg.get_int("ptm.rounds", 0) == 3);
  CHECK(cfg.get_double("train.lr", 0.0) == doctest::Approx(0.5));
  CHECK(cfg.get_bool("ptm.gate_with_initial", true) == false);
  CHECK(cfg.get_string("name", "") == "tiny run");
  CHECK(cfg.get_int("memory.capacity", 8) == 8);
  CHECK_THROWS_AS(KvConfig::from_string("just words\n"), Error);
  CHECK_THROWS_AS(
      KvConfig::from_string("ptm.rounds = many\n").get_int("ptm.rounds", 0),
      Error);
}

TEST_CASE("finite checks can be enabled at runtime") {
  set_finite_checks(true);
  Tensor<float> t({2}, {1.f, std::numeric_limits<float>::infinity()});
  CHECK_THROWS_AS(check_finite(t, "test"), Error);
  set_finite_checks(false);
}
