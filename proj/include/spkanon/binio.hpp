// Copyright (c) 2026 The spkanon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Little-endian binary container helpers shared by the EMBD/FEAT/SOFT
// on-disk formats.

#ifndef SPKANON_BINIO_HPP_
#define SPKANON_BINIO_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "spkanon/common.hpp"

namespace spkanon::binio {

class Reader {
 public:
  explicit Reader(const std::string& path) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open file: " + path);
    buf_.assign((std::istreambuf_iterator<char>(in)),
                std::istreambuf_iterator<char>());
  }

  void expect_magic(const char (&magic)[5]) {
    const std::string got = bytes(4);
    require(std::memcmp(got.data(), magic, 4) == 0,
            "bad magic in " + path_ + ": expected \"" + magic + "\"");
  }

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }

  std::uint16_t u16() {
    const unsigned char* p = take(2);
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
  }

  std::uint32_t u32() {
    const unsigned char* p = take(4);
    return static_cast<std::uint32_t>(p[0]) |
           (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
  }

  float f32() {
    const std::uint32_t bits = u32();
    return std::bit_cast<float>(bits);
  }

  std::string bytes(std::size_t n) {
    const unsigned char* p = take(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }

  void expect_eof() {
    require(pos_ == buf_.size(), "trailing bytes in " + path_);
  }

 private:
  const unsigned char* take(std::size_t n) {
    require(pos_ + n <= buf_.size(), "unexpected end of file: " + path_);
    const auto* p = reinterpret_cast<const unsigned char*>(buf_.data()) + pos_;
    pos_ += n;
    return p;
  }

  std::string path_;
  std::string buf_;
  std::size_t pos_ = 0;
};

class Writer {
 public:
  void magic(const char (&m)[5]) { buf_.append(m, 4); }
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(const std::string& s) { buf_.append(s); }

  // Buffered until save so a failed computation never leaves a partial file.
  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot open for writing: " + path);
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    require(out.good(), "short write: " + path);
  }

 private:
  std::string buf_;
};

}  // namespace spkanon::binio

#endif  // SPKANON_BINIO_HPP_
