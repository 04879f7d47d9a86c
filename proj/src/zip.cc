#include "mobgap/zip.h"

#include <cstdint>
#include <cstring>

#include <zlib.h>

#include "mobgap/error.h"

namespace mobgap {

namespace {

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEndSig = 0x06054b50;

std::uint32_t u16(std::string_view const b, std::size_t const off) {
  if (off + 2 > b.size()) {
    fail(errc::malformed_document, "zip: truncated");
  }
  return static_cast<std::uint8_t>(b[off]) |
         static_cast<std::uint32_t>(static_cast<std::uint8_t>(b[off + 1])) << 8;
}

std::uint32_t u32(std::string_view const b, std::size_t const off) {
  return u16(b, off) | u16(b, off + 2) << 16;
}

void put16(std::string& out, std::uint32_t const v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put32(std::string& out, std::uint32_t const v) {
  put16(out, v & 0xffff);
  put16(out, v >> 16);
}

std::string inflate_raw(std::string_view const in, std::size_t const size_hint,
                        int const window_bits) {
  z_stream zs{};
  if (inflateInit2(&zs, window_bits) != Z_OK) {
    fail(errc::malformed_document, "zlib: inflateInit failed");
  }
  std::string out;
  out.resize(std::max<std::size_t>(size_hint, 1024));
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
  zs.avail_in = static_cast<uInt>(in.size());
  auto written = std::size_t{0};
  auto rc = Z_OK;
  while (rc != Z_STREAM_END) {
    if (written == out.size()) {
      out.resize(out.size() * 2);
    }
    zs.next_out = reinterpret_cast<Bytef*>(out.data() + written);
    zs.avail_out = static_cast<uInt>(out.size() - written);
    rc = inflate(&zs, Z_NO_FLUSH);
    written = out.size() - zs.avail_out;
    if (rc == Z_STREAM_END) {
      break;
    }
    if (rc != Z_OK && !(rc == Z_BUF_ERROR && zs.avail_out == 0)) {
      inflateEnd(&zs);
      fail(errc::malformed_document, "zlib: corrupt deflate stream");
    }
    if (zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      fail(errc::malformed_document, "zlib: truncated deflate stream");
    }
  }
  inflateEnd(&zs);
  out.resize(written);
  return out;
}

}  // namespace

bool is_zip(std::string_view const b) {
  return b.size() >= 4 && u32(b, 0) == kLocalSig;
}

bool is_gzip(std::string_view const b) {
  return b.size() >= 2 && static_cast<std::uint8_t>(b[0]) == 0x1f &&
         static_cast<std::uint8_t>(b[1]) == 0x8b;
}

std::string gunzip(std::string_view const b) {
  return inflate_raw(b, b.size() * 4, 16 + MAX_WBITS);
}

std::string gzip(std::string_view const b) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 16 + MAX_WBITS, 8,
                   Z_DEFAULT_STRATEGY) != Z_OK) {
    fail(errc::io_error, "zlib: deflateInit failed");
  }
  std::string out;
  out.resize(deflateBound(&zs, static_cast<uLong>(b.size())));
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(b.data()));
  zs.avail_in = static_cast<uInt>(b.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  auto const rc = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) {
    fail(errc::io_error, "zlib: deflate failed");
  }
  out.resize(out.size() - zs.avail_out);
  return out;
}

std::map<std::string, std::string> read_zip(std::string_view const b) {
  if (b.size() < 22) {
    fail(errc::malformed_document, "zip: too small");
  }
  auto eocd = std::string_view::npos;
  auto const lowest = b.size() > 22 + 0xffff ? b.size() - 22 - 0xffff : 0;
  for (auto pos = b.size() - 22;; --pos) {
    if (u32(b, pos) == kEndSig) {
      eocd = pos;
      break;
    }
    if (pos == lowest) {
      break;
    }
  }
  if (eocd == std::string_view::npos) {
    fail(errc::malformed_document, "zip: no end of central directory");
  }

  auto const n_entries = u16(b, eocd + 10);
  auto pos = static_cast<std::size_t>(u32(b, eocd + 16));
  if (n_entries == 0xffff || pos == 0xffffffff) {
    fail(errc::malformed_document, "zip: zip64 archives are not supported");
  }

  std::map<std::string, std::string> entries;
  for (auto i = 0U; i < n_entries; ++i) {
    if (u32(b, pos) != kCentralSig) {
      fail(errc::malformed_document, "zip: bad central directory entry");
    }
    auto const flags = u16(b, pos + 8);
    auto const method = u16(b, pos + 10);
    auto const expected_crc = u32(b, pos + 16);
    auto const compressed = u32(b, pos + 20);
    auto const uncompressed = u32(b, pos + 24);
    auto const name_len = u16(b, pos + 28);
    auto const extra_len = u16(b, pos + 30);
    auto const comment_len = u16(b, pos + 32);
    auto const local = static_cast<std::size_t>(u32(b, pos + 42));
    if (pos + 46 + name_len > b.size()) {
      fail(errc::malformed_document, "zip: truncated central directory");
    }
    auto name = std::string{b.substr(pos + 46, name_len)};
    pos += 46 + name_len + extra_len + comment_len;

    if ((flags & 0x1) != 0) {
      fail(errc::malformed_document, "zip: encrypted entry " + name);
    }
    if (name.ends_with('/')) {
      continue;
    }
    if (u32(b, local) != kLocalSig) {
      fail(errc::malformed_document, "zip: bad local header for " + name);
    }
    auto const data = local + 30 + u16(b, local + 26) + u16(b, local + 28);
    if (data + compressed > b.size()) {
      fail(errc::malformed_document, "zip: truncated entry " + name);
    }
    auto const raw = b.substr(data, compressed);
    std::string content;
    switch (method) {
      case 0: content = std::string{raw}; break;
      case 8: content = inflate_raw(raw, uncompressed, -MAX_WBITS); break;
      default:
        fail(errc::malformed_document,
             "zip: unsupported compression method for " + name);
    }
    if (content.size() != uncompressed) {
      fail(errc::malformed_document, "zip: size mismatch for " + name);
    }
    auto const crc = static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<Bytef const*>(content.data()),
              static_cast<uInt>(content.size())));
    if (crc != expected_crc) {
      fail(errc::malformed_document, "zip: crc mismatch for " + name);
    }
    entries.emplace(std::move(name), std::move(content));
  }
  return entries;
}

std::string write_zip(
    std::vector<std::pair<std::string, std::string>> const& entries) {
  std::string out;
  std::string central;
  for (auto const& [name, content] : entries) {
    auto const crc = static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<Bytef const*>(content.data()),
              static_cast<uInt>(content.size())));
    auto const size = static_cast<std::uint32_t>(content.size());
    auto const offset = static_cast<std::uint32_t>(out.size());

    put32(out, kLocalSig);
    put16(out, 20);  // version needed
    put16(out, 0);   // flags
    put16(out, 0);   // stored
    put16(out, 0);   // mod time
    put16(out, 0x21);  // mod date 1980-01-01
    put32(out, crc);
    put32(out, size);
    put32(out, size);
    put16(out, static_cast<std::uint32_t>(name.size()));
    put16(out, 0);
    out += name;
    out += content;

    put32(central, kCentralSig);
    put16(central, 20);  // version made by
    put16(central, 20);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0x21);
    put32(central, crc);
    put32(central, size);
    put32(central, size);
    put16(central, static_cast<std::uint32_t>(name.size()));
    put16(central, 0);  // extra
    put16(central, 0);  // comment
    put16(central, 0);  // disk
    put16(central, 0);  // internal attrs
    put32(central, 0);  // external attrs
    put32(central, offset);
    central += name;
  }
  auto const cd_offset = static_cast<std::uint32_t>(out.size());
  out += central;
  put32(out, kEndSig);
  put16(out, 0);
  put16(out, 0);
  put16(out, static_cast<std::uint32_t>(entries.size()));
  put16(out, static_cast<std::uint32_t>(entries.size()));
  put32(out, static_cast<std::uint32_t>(central.size()));
  put32(out, cd_offset);
  put16(out, 0);
  return out;
}

}  // namespace mobgap
