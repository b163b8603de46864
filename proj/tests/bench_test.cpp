#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "fzip/bench.hpp"
#include "fzip/error.hpp"
#include "test_support.hpp"

namespace fzip::bench {
namespace {

const std::string kHeader =
    "method,corpus,bytes_in,bytes_out,ratio,ratio_excl_model,t_memorize_ms,t_compress_ms,"
    "t_decompress_ms,workers,status\n";

Bytes sample(std::size_t n) {
  std::mt19937_64 rng(131);
  return test::texty_bytes(rng, n);
}

Options opts() {
  Options o;
  o.zlib_tool = FZIP_ZLIB_TOOL;
  return o;
}

TEST(Bench, EmptyMethodListIsHeaderOnly) {
  const auto rows = table1(sample(100), "s", {}, opts());
  std::ostringstream s;
  write_csv(s, rows);
  EXPECT_EQ(s.str(), kHeader);
}

TEST(Bench, Table1RowsRoundTripAndAccount) {
  const auto x = sample(20000);
  const auto rows = table1(x, "s", {"zlib", "gzip", "bzip2", "rank", "ac", "rank-nomem"}, opts());
  ASSERT_EQ(rows.size(), 6u);
  for (const auto& r : rows) {
    ASSERT_TRUE(r.ok()) << r.method << ": " << r.status;
    EXPECT_EQ(r.bytes_in, x.size());
    EXPECT_DOUBLE_EQ(r.ratio, static_cast<double>(r.bytes_out) / x.size());
    EXPECT_LE(r.ratio_excl_model, r.ratio);
  }
  EXPECT_DOUBLE_EQ(rows[0].ratio, rows[0].ratio_excl_model);
  EXPECT_LT(rows[3].ratio_excl_model, rows[3].ratio);
  EXPECT_DOUBLE_EQ(rows[5].ratio_excl_model, rows[5].ratio);
  // Ratios are reproducible.
  const auto again = table1(x, "s", {"zlib", "rank", "ac"}, opts());
  EXPECT_EQ(again[0].bytes_out, rows[0].bytes_out);
  EXPECT_EQ(again[1].bytes_out, rows[3].bytes_out);
  EXPECT_EQ(again[2].bytes_out, rows[4].bytes_out);
}

TEST(Bench, MissingToolIsSkipped) {
  const auto rows = table1(sample(1000), "s", {"extcmd:no-such-tool -c|no-such-tool -d", "rank"}, opts());
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].status, "skipped: tool not found");
  EXPECT_TRUE(rows[1].ok());
}

TEST(Bench, NonRoundTripIsAHardFailure) {
  // "cat" compresses fine but "head -c 10" does not restore the input.
  EXPECT_THROW(table1(sample(1000), "s", {"extcmd:cat|head -c 10"}, opts()), Error);
}

TEST(Bench, MethodNames) {
  const auto m = parse_method("fzip:ac:sliding:nomem:builtin-mrl");
  EXPECT_FALSE(m.external);
  EXPECT_EQ(m.config.mode, CodingMode::Arithmetic);
  EXPECT_EQ(m.config.policy.mode, ContextMode::Sliding);
  EXPECT_FALSE(m.config.memorize);
  EXPECT_EQ(m.config.secondary_id, "builtin-mrl");
  EXPECT_EQ(parse_method("gzip").compress_cmd, "gzip -9 -c");
  EXPECT_THROW(parse_method("lz4"), Error);
  EXPECT_THROW(parse_method("fzip:rank:dynamic"), Error);
}

TEST(Bench, ContextSweepSortsAndDeduplicates) {
  const auto x = sample(6000);
  const auto rows = context_sweep(x, "s", {512, 32, 128, 32}, "rank-sliding", opts());
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].method, "rank-sliding/w32");
  EXPECT_EQ(rows[1].method, "rank-sliding/w128");
  EXPECT_EQ(rows[2].method, "rank-sliding/w512");
  EXPECT_EQ(context_sweep(x, "s", {64}, "ac-sliding", opts()).size(), 1u);
  EXPECT_THROW(context_sweep(x, "s", {64}, "gzip", opts()), Error);
}

TEST(Bench, SizeSweepRows) {
  const auto x = sample(5000);
  const auto rows = size_sweep(x, "s", {4000, 1000, 1000, 9000}, "rank", opts());
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].bytes_in, 1000u);
  EXPECT_EQ(rows[1].bytes_in, 4000u);
  EXPECT_TRUE(rows[0].ok() && rows[1].ok());
  EXPECT_EQ(rows[2].status.rfind("error:", 0), 0u);
}

TEST(Bench, TrendAndSpreadHelpers) {
  std::vector<Row> rows(3);
  rows[0].ratio = 0.50;
  rows[1].ratio = 0.503;
  rows[2].ratio = 0.49;
  EXPECT_TRUE(non_increasing(rows, 0.005));
  rows[1].ratio = 0.51;
  EXPECT_FALSE(non_increasing(rows, 0.005));
  rows[1].status = "error: x";
  EXPECT_TRUE(non_increasing(rows, 0.005));
  EXPECT_NEAR(ratio_spread(rows), 0.01, 1e-12);
}

TEST(Bench, SizesAndPlotData) {
  EXPECT_EQ(parse_size("1MB"), 1000000u);
  EXPECT_EQ(parse_size("4MiB"), 4194304u);
  EXPECT_EQ(parse_size("512k"), 512000u);
  EXPECT_EQ(parse_size("77"), 77u);
  EXPECT_THROW(parse_size("MB"), Error);
  EXPECT_THROW(parse_size("3 parsecs"), Error);
  std::vector<Row> rows(2);
  rows[0].ratio = 0.5;
  rows[1].status = "skipped: x";
  std::ostringstream s;
  write_plot_data(s, rows, {32, 64});
  EXPECT_EQ(s.str(), "# x ratio ratio_excl_model\n32 0.5 0\n");
}

}  // namespace
}  // namespace fzip::bench
