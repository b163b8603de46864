// fzip command-line front end: compress, decompress, inspect, bench.
//
// A JSON summary line goes to stdout; diagnostics go to stderr as
// "error: <category>: <detail>" with a nonzero exit code.

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "fzip/bench.hpp"
#include "fzip/pipeline.hpp"
#include "json.hpp"

namespace {

using json = nlohmann::json;

int exit_code(fzip::ErrorKind kind) {
  using enum fzip::ErrorKind;
  switch (kind) {
    case Config: return 2;
    case Io: return 3;
    case NotAnArchive:
    case CorruptArchive:
    case UnsupportedVersion:
    case CorruptStream: return 4;
    case ModelMismatch: return 5;
    case Transport:
    case ExternalTool:
    case RemotePredictor: return 6;
    case UndefinedRatio: return 7;
  }
  return 1;
}

std::string hex(std::span<const std::uint8_t> bytes) {
  std::ostringstream s;
  for (auto b : bytes) s << std::hex << std::setw(2) << std::setfill('0') << int(b);
  return s.str();
}

json stage_json(const fzip::StageTimes& t) {
  return {{"memorize", t.memorize_ms}, {"tokenize", t.tokenize_ms}, {"code", t.code_ms},
          {"secondary", t.secondary_ms}, {"total", t.total_ms}};
}

json ratio_or_null(std::uint64_t in, std::uint64_t out) {
  if (in == 0) return nullptr;
  return fzip::ratio(in, out);
}

std::string default_decompressed_name(const std::string& in) {
  if (in.size() > 3 && in.ends_with(".fz")) return in.substr(0, in.size() - 3);
  return in + ".out";
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

struct CompressArgs {
  std::string input;
  std::string out;
  std::string mode = "rank";
  std::string context = "dynamic";
  std::uint32_t window = fzip::kDefaultWindow;
  std::string predictor = "builtin-ctx3";
  std::string tokenizer = "byte";
  std::string secondary;
  bool memorize = false;
  std::uint32_t epochs = 1;
  unsigned workers = 1;
  unsigned timeout_s = 600;
};

int run_compress(const CompressArgs& a) {
  fzip::CompressConfig c;
  c.mode = a.mode == "ac" ? fzip::CodingMode::Arithmetic : fzip::CodingMode::Rank;
  c.policy = {a.context == "sliding" ? fzip::ContextMode::Sliding : fzip::ContextMode::Dynamic, a.window};
  c.predictor_id = a.predictor;
  c.tokenizer_id = a.tokenizer;
  c.secondary_id = !a.secondary.empty() ? a.secondary : "builtin-mrl";
  c.memorize = a.memorize;
  c.epochs = a.epochs;
  c.workers = a.workers;
  c.timeout = std::chrono::seconds(a.timeout_s);
  fzip::validate(c);

  const auto input = fzip::read_file(a.input);
  auto res = fzip::compress(input, c);
  const auto out = a.out.empty() ? a.input + ".fz" : a.out;
  fzip::write_file_atomic(out, res.archive);
  if (res.warning) std::cerr << "warning: " << *res.warning << '\n';

  json j = {{"op", "compress"},
            {"output", out},
            {"input_len", input.size()},
            {"archive_len", res.archive.size()},
            {"ratio", ratio_or_null(input.size(), res.archive.size())},
            {"ratio_excl_model", ratio_or_null(input.size(), res.archive.size() - res.model_blob_len)},
            {"model_blob_len", res.model_blob_len},
            {"payload_len", res.payload_len},
            {"n_tokens", res.n_tokens},
            {"wall_ms", stage_json(res.times)}};
  std::cout << j.dump() << std::endl;
  return 0;
}

int run_decompress(const std::string& in, const std::string& out_arg, unsigned workers, unsigned timeout_s) {
  const auto data = fzip::read_file(in);
  auto res = fzip::decompress(data, workers, std::chrono::seconds(timeout_s));
  const auto out = out_arg.empty() ? default_decompressed_name(in) : out_arg;
  fzip::write_file_atomic(out, res.data);
  json j = {{"op", "decompress"},
            {"output", out},
            {"input_len", res.data.size()},
            {"archive_len", data.size()},
            {"ratio", ratio_or_null(res.data.size(), data.size())},
            {"model_blob_len", res.header.model_blob_len},
            {"wall_ms", stage_json(res.times)}};
  std::cout << j.dump() << std::endl;
  return 0;
}

int run_inspect(const std::string& in, bool as_json) {
  const auto data = fzip::read_file(in);
  const auto a = fzip::read_archive(data);
  const auto& h = a.header;
  json j = {{"version", fzip::kArchiveVersion},
            {"mode", h.mode == fzip::CodingMode::Rank ? "rank" : "ac"},
            {"context_mode", h.context_mode == fzip::ContextMode::Dynamic ? "dynamic" : "sliding"},
            {"window", h.window},
            {"tokenizer_id", h.tokenizer_id},
            {"predictor_id", h.predictor_id},
            {"predictor_fingerprint", hex(h.predictor_fingerprint)},
            {"n_tokens", h.n_tokens},
            {"original_len", h.original_len},
            {"secondary_id", h.secondary_id},
            {"model_blob_len", h.model_blob_len},
            {"payload_len", h.payload_len},
            {"archive_len", data.size()},
            {"crc32", hex(std::span(data).last(4))}};
  if (as_json) {
    std::cout << j.dump() << std::endl;
  } else {
    for (const auto& [k, v] : j.items())
      std::cout << k << ": " << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
  }
  return 0;
}

struct BenchArgs {
  std::string corpus;
  std::string prefix;
  std::string methods = "bzip2,gzip,zlib,rank,ac";
  std::string method = "rank";
  std::string windows = "32,128,512";
  std::string sizes = "1MB,4MB";
  std::string csv;
  std::string plot;
  unsigned workers = 1;
  std::uint32_t window = fzip::kDefaultWindow;
  std::string predictor = "builtin-ctx3";
};

void emit_csv(const std::vector<fzip::bench::Row>& rows, const std::string& path) {
  std::ostringstream s;
  fzip::bench::write_csv(s, rows);
  if (path.empty() || path == "-") {
    std::cout << s.str();
  } else {
    const auto text = s.str();
    fzip::write_file_atomic(path, fzip::as_bytes(text));
  }
}

void emit_plot(const std::vector<fzip::bench::Row>& rows, const std::vector<std::uint64_t>& xs,
               const std::string& path) {
  if (path.empty()) return;
  std::ostringstream s;
  fzip::bench::write_plot_data(s, rows, xs);
  const auto text = s.str();
  fzip::write_file_atomic(path, fzip::as_bytes(text));
}

int run_bench(const std::string& kind, const BenchArgs& a) {
  auto corpus = fzip::read_file(a.corpus);
  std::string name = std::filesystem::path(a.corpus).filename().string();
  if (!a.prefix.empty()) {
    const auto n = fzip::bench::parse_size(a.prefix);
    if (n > corpus.size())
      fzip::fail(fzip::ErrorKind::Config, "corpus is shorter than --prefix " + a.prefix);
    corpus.resize(n);
    name += "[0:" + std::to_string(n) + "]";
  }
  fzip::bench::Options o;
  o.workers = a.workers;
  o.window = a.window;
  o.predictor_id = a.predictor;

  if (kind == "table1") {
    const auto rows = fzip::bench::table1(corpus, name, split_list(a.methods), o);
    emit_csv(rows, a.csv);
    return 0;
  }
  if (kind == "context") {
    std::vector<std::uint32_t> ws;
    for (const auto& w : split_list(a.windows)) ws.push_back(static_cast<std::uint32_t>(std::stoul(w)));
    const auto rows = fzip::bench::context_sweep(corpus, name, ws, a.method, o);
    emit_csv(rows, a.csv);
    std::sort(ws.begin(), ws.end());
    ws.erase(std::unique(ws.begin(), ws.end()), ws.end());
    emit_plot(rows, std::vector<std::uint64_t>(ws.begin(), ws.end()), a.plot);
    const bool trend = fzip::bench::non_increasing(rows, 0.005);
    std::cerr << "trend (non-increasing within 0.005): " << (trend ? "yes" : "no") << '\n';
    return 0;
  }
  std::vector<std::uint64_t> sizes;
  for (const auto& s : split_list(a.sizes)) sizes.push_back(fzip::bench::parse_size(s));
  const auto rows = fzip::bench::size_sweep(corpus, name, sizes, a.method, o);
  emit_csv(rows, a.csv);
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  emit_plot(rows, sizes, a.plot);
  std::cerr << "ratio spread: " << fzip::bench::ratio_spread(rows) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fzip: lossless text compression with a predictive model"};
  app.require_subcommand(1);

  CompressArgs ca;
  auto* compress = app.add_subcommand("compress", "compress a file into a .fz archive");
  compress->add_option("input", ca.input)->required();
  compress->add_option("--out,-o", ca.out, "archive path (default <input>.fz)");
  compress->add_option("--mode", ca.mode)->check(CLI::IsMember({"rank", "ac"}));
  compress->add_option("--context", ca.context)->check(CLI::IsMember({"dynamic", "sliding"}));
  compress->add_option("--window", ca.window)->check(CLI::Range(1u, 1u << 30));
  compress->add_option("--predictor", ca.predictor, "builtin-ctxK or ext:<address>");
  compress->add_option("--tokenizer", ca.tokenizer);
  compress->add_option("--secondary", ca.secondary, "none, builtin-mrl or extcmd:<c>|<d>");
  compress->add_flag("--memorize", ca.memorize, "fit the predictor on the input and store it");
  compress->add_option("--epochs", ca.epochs)->check(CLI::Range(1u, 1000000u));
  compress->add_option("--workers", ca.workers)->check(CLI::Range(1u, 1024u));
  compress->add_option("--timeout", ca.timeout_s, "seconds for external tools and predictors");

  std::string d_in, d_out;
  unsigned d_workers = 1, d_timeout = 600;
  auto* decompress = app.add_subcommand("decompress", "restore the original file");
  decompress->add_option("input", d_in)->required();
  decompress->add_option("--out,-o", d_out, "output path (default: input without .fz)");
  decompress->add_option("--workers", d_workers)->check(CLI::Range(1u, 1024u));
  decompress->add_option("--timeout", d_timeout);

  std::string i_in;
  bool i_json = false;
  auto* inspect = app.add_subcommand("inspect", "print the archive header");
  inspect->add_option("input", i_in)->required();
  inspect->add_flag("--json", i_json);

  BenchArgs ba;
  std::string bench_kind;
  auto* bench = app.add_subcommand("bench", "run benchmarks, CSV on stdout or --csv");
  bench->add_option("kind", bench_kind)->required()->check(CLI::IsMember({"table1", "context", "size"}));
  bench->add_option("--corpus", ba.corpus)->required();
  bench->add_option("--prefix", ba.prefix, "use only the first N bytes (e.g. 10MB)");
  bench->add_option("--methods", ba.methods, "table1: comma-separated methods");
  bench->add_option("--method", ba.method, "context/size sweeps: one method");
  bench->add_option("--windows", ba.windows);
  bench->add_option("--sizes", ba.sizes);
  bench->add_option("--csv", ba.csv);
  bench->add_option("--plot", ba.plot, "gnuplot data file for sweeps");
  bench->add_option("--workers", ba.workers)->check(CLI::Range(1u, 1024u));
  bench->add_option("--window", ba.window)->check(CLI::Range(1u, 1u << 30));
  bench->add_option("--predictor", ba.predictor);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*compress) return run_compress(ca);
    if (*decompress) return run_decompress(d_in, d_out, d_workers, d_timeout);
    if (*inspect) return run_inspect(i_in, i_json);
    return run_bench(bench_kind, ba);
  } catch (const fzip::Error& e) {
    std::cerr << "error: " << fzip::to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
}
