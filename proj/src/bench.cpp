#include "fzip/bench.hpp"

#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <ostream>

#include "fzip/subprocess.hpp"

namespace fzip::bench {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string sibling_tool(const std::string& name) {
  std::error_code ec;
  const auto self = std::filesystem::read_symlink("/proc/self/exe", ec);
  if (!ec) {
    const auto candidate = self.parent_path() / name;
    if (std::filesystem::exists(candidate, ec)) return candidate.string();
  }
  return name;
}

bool tool_available(const std::string& command) {
  const auto argv = split_command(command);
  if (argv.empty()) return false;
  const auto& prog = argv[0];
  if (prog.find('/') != std::string::npos) return ::access(prog.c_str(), X_OK) == 0;
  const char* path = std::getenv("PATH");
  std::string_view dirs = path ? path : "/usr/bin:/bin";
  while (!dirs.empty()) {
    const auto colon = dirs.find(':');
    const auto dir = dirs.substr(0, colon);
    const auto full = std::string(dir.empty() ? "." : dir) + "/" + prog;
    if (::access(full.c_str(), X_OK) == 0) return true;
    if (colon == std::string_view::npos) break;
    dirs.remove_prefix(colon + 1);
  }
  return false;
}

Method builtin(std::string name, CodingMode mode, ContextMode ctx, bool memorize,
               std::string secondary, const Options& o) {
  Method m;
  m.name = std::move(name);
  m.config.mode = mode;
  m.config.policy = {ctx, o.window};
  m.config.memorize = memorize;
  m.config.secondary_id = std::move(secondary);
  m.config.workers = o.workers;
  m.config.predictor_id = o.predictor_id;
  return m;
}

Method external(std::string name, std::string c, std::string d) {
  Method m;
  m.name = std::move(name);
  m.external = true;
  m.compress_cmd = std::move(c);
  m.decompress_cmd = std::move(d);
  return m;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  while (true) {
    const auto at = s.find(sep);
    parts.push_back(s.substr(0, at));
    if (at == std::string_view::npos) break;
    s.remove_prefix(at + 1);
  }
  return parts;
}

}  // namespace

Method parse_method(std::string_view name, const Options& o) {
  const std::string n(name);
  if (n == "bzip2") return external(n, "bzip2 -9 -c", "bzip2 -d -c");
  if (n == "gzip") return external(n, "gzip -9 -c", "gzip -d -c");
  if (n == "xz") return external(n, "xz -9 -c", "xz -d -c");
  if (n == "zlib") {
    const auto tool = o.zlib_tool.empty() ? sibling_tool("fzip-zlib") : o.zlib_tool;
    return external(n, tool + " -c -6", tool + " -d");
  }
  if (n.starts_with("extcmd:")) {
    const auto body = n.substr(7);
    const auto bar = body.find('|');
    if (bar == std::string::npos) fail(ErrorKind::Config, "extcmd method needs '<compress>|<decompress>'");
    return external(n, body.substr(0, bar), body.substr(bar + 1));
  }
  using enum CodingMode;
  using enum ContextMode;
  if (n == "rank") return builtin(n, Rank, Dynamic, true, "builtin-mrl", o);
  if (n == "ac") return builtin(n, Arithmetic, Dynamic, true, "none", o);
  if (n == "rank-nomem") return builtin(n, Rank, Dynamic, false, "builtin-mrl", o);
  if (n == "ac-nomem") return builtin(n, Arithmetic, Dynamic, false, "none", o);
  if (n == "rank-sliding") return builtin(n, Rank, Sliding, true, "builtin-mrl", o);
  if (n == "ac-sliding") return builtin(n, Arithmetic, Sliding, true, "none", o);
  if (n.starts_with("fzip:")) {
    const auto parts = split(std::string_view(n).substr(5), ':');
    if (parts.size() < 3 || parts.size() > 4) fail(ErrorKind::Config, "bad method '" + n + "'");
    CodingMode mode;
    if (parts[0] == "rank") mode = Rank;
    else if (parts[0] == "ac") mode = Arithmetic;
    else fail(ErrorKind::Config, "bad coding mode in '" + n + "'");
    ContextMode ctx;
    if (parts[1] == "dynamic") ctx = Dynamic;
    else if (parts[1] == "sliding") ctx = Sliding;
    else fail(ErrorKind::Config, "bad context mode in '" + n + "'");
    if (parts[2] != "mem" && parts[2] != "nomem") fail(ErrorKind::Config, "bad memorize flag in '" + n + "'");
    const std::string secondary =
        parts.size() == 4 ? std::string(parts[3]) : (mode == Rank ? "builtin-mrl" : "none");
    return builtin(n, mode, ctx, parts[2] == "mem", secondary, o);
  }
  fail(ErrorKind::Config, "unknown benchmark method '" + n + "'");
}

Row run_method(const Method& m, ByteView corpus, const std::string& corpus_name) {
  Row row;
  row.method = m.name;
  row.corpus = corpus_name;
  row.bytes_in = corpus.size();
  row.workers = m.external ? 1 : m.config.workers;

  Bytes out;
  Bytes back;
  std::size_t model_len = 0;
  if (m.external) {
    if (!tool_available(m.compress_cmd) || !tool_available(m.decompress_cmd)) {
      row.status = "skipped: tool not found";
      return row;
    }
    auto t0 = Clock::now();
    out = compress_external(m.compress_cmd, corpus);
    row.t_compress_ms = ms_since(t0);
    t0 = Clock::now();
    back = compress_external(m.decompress_cmd, out);
    row.t_decompress_ms = ms_since(t0);
  } else {
    auto res = compress(corpus, m.config);
    row.t_memorize_ms = res.times.memorize_ms;
    row.t_compress_ms = res.times.total_ms;
    model_len = res.model_blob_len;
    out = std::move(res.archive);
    const auto t0 = Clock::now();
    back = decompress(out, m.config.workers).data;
    row.t_decompress_ms = ms_since(t0);
  }
  if (!std::equal(back.begin(), back.end(), corpus.begin(), corpus.end()))
    fail(ErrorKind::CorruptStream, "method '" + m.name + "' did not round-trip");
  row.bytes_out = out.size();
  if (!corpus.empty()) {
    row.ratio = ratio(corpus.size(), out.size());
    row.ratio_excl_model = ratio(corpus.size(), out.size() - model_len);
  }
  return row;
}

std::vector<Row> table1(ByteView corpus, const std::string& corpus_name,
                        const std::vector<std::string>& methods, const Options& options) {
  std::vector<Row> rows;
  for (const auto& name : methods) rows.push_back(run_method(parse_method(name, options), corpus, corpus_name));
  return rows;
}

std::vector<Row> context_sweep(ByteView corpus, const std::string& corpus_name,
                               std::vector<std::uint32_t> windows, const std::string& method,
                               const Options& options) {
  std::sort(windows.begin(), windows.end());
  windows.erase(std::unique(windows.begin(), windows.end()), windows.end());
  std::vector<Row> rows;
  for (auto w : windows) {
    auto opts = options;
    opts.window = w;
    auto m = parse_method(method, opts);
    if (m.external) fail(ErrorKind::Config, "context sweep needs a built-in method");
    m.name += "/w" + std::to_string(w);
    rows.push_back(run_method(m, corpus, corpus_name));
  }
  return rows;
}

std::vector<Row> size_sweep(ByteView corpus, const std::string& corpus_name,
                            std::vector<std::uint64_t> sizes, const std::string& method,
                            const Options& options) {
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  const auto m = parse_method(method, options);
  std::vector<Row> rows;
  for (auto size : sizes) {
    const auto name = corpus_name + "[0:" + std::to_string(size) + "]";
    if (size > corpus.size()) {
      Row row;
      row.method = m.name;
      row.corpus = name;
      row.bytes_in = size;
      row.workers = options.workers;
      row.status = "error: corpus has only " + std::to_string(corpus.size()) + " bytes";
      rows.push_back(std::move(row));
      continue;
    }
    rows.push_back(run_method(m, corpus.first(static_cast<std::size_t>(size)), name));
  }
  return rows;
}

bool non_increasing(const std::vector<Row>& rows, double eps) {
  std::vector<double> r;
  for (const auto& row : rows)
    if (row.ok()) r.push_back(row.ratio);
  if (r.size() < 2) return true;
  for (std::size_t i = 1; i < r.size(); ++i)
    if (r[i] > r[i - 1] + eps) return false;
  return r.back() <= r.front() + eps;
}

double ratio_spread(const std::vector<Row>& rows) {
  double lo = 0, hi = 0;
  bool any = false;
  for (const auto& row : rows) {
    if (!row.ok()) continue;
    lo = any ? std::min(lo, row.ratio) : row.ratio;
    hi = any ? std::max(hi, row.ratio) : row.ratio;
    any = true;
  }
  return hi - lo;
}

void write_csv(std::ostream& out, const std::vector<Row>& rows) {
  auto quoted = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  };
  out << "method,corpus,bytes_in,bytes_out,ratio,ratio_excl_model,t_memorize_ms,t_compress_ms,"
         "t_decompress_ms,workers,status\n";
  for (const auto& r : rows) {
    out << quoted(r.method) << ',' << quoted(r.corpus) << ',' << r.bytes_in << ',' << r.bytes_out << ','
        << std::fixed << std::setprecision(6) << r.ratio << ',' << r.ratio_excl_model << ','
        << std::setprecision(3) << r.t_memorize_ms << ',' << r.t_compress_ms << ','
        << r.t_decompress_ms << ',' << r.workers << ',' << quoted(r.status) << '\n';
  }
  out.unsetf(std::ios::floatfield);
}

void write_plot_data(std::ostream& out, const std::vector<Row>& rows,
                     const std::vector<std::uint64_t>& xs) {
  out << "# x ratio ratio_excl_model\n";
  for (std::size_t i = 0; i < rows.size() && i < xs.size(); ++i)
    if (rows[i].ok())
      out << xs[i] << ' ' << std::setprecision(6) << rows[i].ratio << ' ' << rows[i].ratio_excl_model << '\n';
}

std::uint64_t parse_size(std::string_view text) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr == text.data()) fail(ErrorKind::Config, "bad size '" + std::string(text) + "'");
  std::string unit(ptr, text.data() + text.size());
  std::transform(unit.begin(), unit.end(), unit.begin(), [](unsigned char c) { return std::tolower(c); });
  std::uint64_t scale = 1;
  if (unit.empty() || unit == "b") scale = 1;
  else if (unit == "k" || unit == "kb") scale = 1000;
  else if (unit == "m" || unit == "mb") scale = 1000 * 1000;
  else if (unit == "g" || unit == "gb") scale = 1000ull * 1000 * 1000;
  else if (unit == "kib") scale = 1024;
  else if (unit == "mib") scale = 1024 * 1024;
  else if (unit == "gib") scale = 1024ull * 1024 * 1024;
  else fail(ErrorKind::Config, "bad size unit in '" + std::string(text) + "'");
  return value * scale;
}

}  // namespace fzip::bench
