#pragma once

// Benchmark harness. Every method decompresses its own output and compares it
// with the input before a ratio is reported.
//
// CSV columns (stable):
//   method,corpus,bytes_in,bytes_out,ratio,ratio_excl_model,
//   t_memorize_ms,t_compress_ms,t_decompress_ms,workers,status
//
// status is "ok", "skipped: <why>" (e.g. external tool missing) or
// "error: <why>" for rows that could not run (e.g. prefix larger than corpus).

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fzip/pipeline.hpp"

namespace fzip::bench {

struct Row {
  std::string method;
  std::string corpus;
  std::uint64_t bytes_in = 0;
  std::uint64_t bytes_out = 0;
  double ratio = 0;
  double ratio_excl_model = 0;
  double t_memorize_ms = 0;
  double t_compress_ms = 0;
  double t_decompress_ms = 0;
  unsigned workers = 1;
  std::string status = "ok";

  bool ok() const noexcept { return status == "ok"; }
};

// A named method: either a built-in pipeline configuration or an external
// compress/decompress command pair.
//
// Names: "bzip2", "gzip", "zlib", "xz"; "rank", "ac", "rank-nomem",
// "ac-nomem", "rank-sliding", "ac-sliding"; "fzip:<rank|ac>:<dynamic|sliding>:
// <mem|nomem>[:<secondary>]"; "extcmd:<compress>|<decompress>".
struct Method {
  std::string name;
  bool external = false;
  CompressConfig config;
  std::string compress_cmd;
  std::string decompress_cmd;
};

struct Options {
  unsigned workers = 1;
  std::uint32_t window = kDefaultWindow;
  std::string predictor_id = "builtin-ctx3";
  std::string zlib_tool;  // defaults to fzip-zlib next to the running binary
};

Method parse_method(std::string_view name, const Options& options = {});

Row run_method(const Method& method, ByteView corpus, const std::string& corpus_name);

std::vector<Row> table1(ByteView corpus, const std::string& corpus_name,
                        const std::vector<std::string>& methods, const Options& options = {});

// One row per window, ascending and deduplicated. The method is built in
// with its window replaced by each sweep value.
std::vector<Row> context_sweep(ByteView corpus, const std::string& corpus_name,
                               std::vector<std::uint32_t> windows, const std::string& method,
                               const Options& options = {});

// One row per prefix size, ascending and deduplicated. Sizes beyond the
// corpus produce an error row and the sweep continues.
std::vector<Row> size_sweep(ByteView corpus, const std::string& corpus_name,
                            std::vector<std::uint64_t> sizes, const std::string& method,
                            const Options& options = {});

// ratio(last) <= ratio(first) + eps, and no step rises by more than eps.
bool non_increasing(const std::vector<Row>& rows, double eps);
// max - min over the ok rows.
double ratio_spread(const std::vector<Row>& rows);

void write_csv(std::ostream& out, const std::vector<Row>& rows);
// Whitespace-separated columns "x ratio ratio_excl_model", one line per ok row.
void write_plot_data(std::ostream& out, const std::vector<Row>& rows,
                     const std::vector<std::uint64_t>& xs);

// "1MB" -> 1000000, "4MiB" -> 4194304, "512k" -> 512000, plain digits as bytes.
std::uint64_t parse_size(std::string_view text);

}  // namespace fzip::bench
