// zlib stream filter (stdin -> stdout), used as the zlib benchmark baseline.
//   fzip-zlib -c [-N]   compress at level N (default 6)
//   fzip-zlib -d        decompress

#include <zlib.h>

#include <cstdio>
#include <cstring>
#include <iostream>
#include <iterator>
#include <string>
#include <vector>

namespace {

int run(bool compress_mode, int level) {
  std::vector<unsigned char> in((std::istreambuf_iterator<char>(std::cin)), std::istreambuf_iterator<char>());
  z_stream zs{};
  int rc = compress_mode ? deflateInit(&zs, level) : inflateInit(&zs);
  if (rc != Z_OK) return 1;
  zs.next_in = in.data();
  zs.avail_in = static_cast<uInt>(in.size());
  std::vector<unsigned char> buf(1 << 16);
  do {
    zs.next_out = buf.data();
    zs.avail_out = static_cast<uInt>(buf.size());
    rc = compress_mode ? deflate(&zs, Z_FINISH) : inflate(&zs, Z_NO_FLUSH);
    if (rc == Z_STREAM_ERROR || rc == Z_DATA_ERROR || rc == Z_MEM_ERROR || rc == Z_NEED_DICT) {
      std::cerr << "fzip-zlib: " << (zs.msg ? zs.msg : "stream error") << '\n';
      return 1;
    }
    std::fwrite(buf.data(), 1, buf.size() - zs.avail_out, stdout);
    if (rc == Z_BUF_ERROR && zs.avail_in == 0 && zs.avail_out != 0) {
      std::cerr << "fzip-zlib: truncated input\n";
      return 1;
    }
  } while (rc != Z_STREAM_END);
  compress_mode ? deflateEnd(&zs) : inflateEnd(&zs);
  return std::fflush(stdout) == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  std::ios::sync_with_stdio(false);
  bool compress_mode = true;
  int level = 6;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "-c") compress_mode = true;
    else if (a == "-d") compress_mode = false;
    else if (a.size() == 2 && a[0] == '-' && a[1] >= '0' && a[1] <= '9') level = a[1] - '0';
    else {
      std::cerr << "usage: fzip-zlib [-c [-0..-9] | -d] < in > out\n";
      return 2;
    }
  }
  return run(compress_mode, level);
}
