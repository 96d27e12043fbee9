//
// Copyright 2026 The attnlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "attnlab/container.hpp"

#include <array>
#include <cstring>
#include <fstream>

#include "attnlab/errors.hpp"

namespace attnlab {

namespace {

constexpr char kMagic[8] = {'A', 'T', 'N', 'L', 'B', 'I', 'N', '1'};
constexpr uint32_t kVersion = 1;

void append_u32(std::vector<uint8_t>& buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

void append_u64(std::vector<uint8_t>& buf, uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  Reader(const uint8_t* p, size_t n) : p_(p), n_(n) {}

  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }

  std::vector<uint8_t> blob(size_t len) {
    need(len);
    std::vector<uint8_t> out(p_ + pos_, p_ + pos_ + len);
    pos_ += len;
    return out;
  }

  size_t pos() const { return pos_; }

 private:
  void need(size_t k) {
    if (pos_ + k > n_) throw CheckpointError("container: truncated file");
  }
  const uint8_t* p_;
  size_t n_;
  size_t pos_ = 0;
};

}  // namespace

uint32_t crc32(const uint8_t* data, size_t len, uint32_t seed) {
  static const auto table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  uint32_t c = seed ^ 0xFFFFFFFFu;
  for (size_t i = 0; i < len; ++i) c = table[(c ^ data[i]) & 0xFFu] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

void Container::put_bytes(const std::string& name, std::vector<uint8_t> bytes) {
  sections[name] = std::move(bytes);
}

void Container::put_string(const std::string& name, const std::string& s) {
  sections[name] = std::vector<uint8_t>(s.begin(), s.end());
}

void Container::put_doubles(const std::string& name, const std::vector<double>& v) {
  std::vector<uint8_t> bytes(v.size() * sizeof(double));
  if (!v.empty()) std::memcpy(bytes.data(), v.data(), bytes.size());
  sections[name] = std::move(bytes);
}

const std::vector<uint8_t>& Container::bytes(const std::string& name) const {
  auto it = sections.find(name);
  if (it == sections.end()) throw CheckpointError("container: missing section '" + name + "'");
  return it->second;
}

std::string Container::get_string(const std::string& name) const {
  const auto& b = bytes(name);
  return std::string(b.begin(), b.end());
}

std::vector<double> Container::get_doubles(const std::string& name) const {
  const auto& b = bytes(name);
  if (b.size() % sizeof(double) != 0) {
    throw CheckpointError("container: section '" + name + "' is not a double array");
  }
  std::vector<double> out(b.size() / sizeof(double));
  if (!out.empty()) std::memcpy(out.data(), b.data(), b.size());
  return out;
}

void write_container(const std::string& path, const Container& c) {
  std::vector<uint8_t> body;
  append_u32(body, kVersion);
  append_u32(body, static_cast<uint32_t>(c.sections.size()));
  for (const auto& [name, payload] : c.sections) {
    append_u32(body, static_cast<uint32_t>(name.size()));
    body.insert(body.end(), name.begin(), name.end());
    append_u64(body, payload.size());
    body.insert(body.end(), payload.begin(), payload.end());
  }
  const uint32_t checksum = crc32(body.data(), body.size());
  append_u32(body, checksum);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("container: cannot open " + path + " for writing");
  out.write(kMagic, sizeof(kMagic));
  out.write(reinterpret_cast<const char*>(body.data()),
            static_cast<std::streamsize>(body.size()));
  if (!out) throw CheckpointError("container: write failed for " + path);
}

Container read_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("container: cannot open " + path);
  std::vector<uint8_t> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (raw.size() < sizeof(kMagic) + 4 || std::memcmp(raw.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("container: bad magic in " + path);
  }
  const uint8_t* body = raw.data() + sizeof(kMagic);
  const size_t body_len = raw.size() - sizeof(kMagic);

  const uint32_t stored = [&] {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(body[body_len - 4 + i]) << (8 * i);
    return v;
  }();
  if (crc32(body, body_len - 4) != stored) {
    throw CheckpointError("container: checksum mismatch in " + path);
  }

  Reader r(body, body_len - 4);
  const uint32_t version = r.u32();
  if (version != kVersion) {
    throw CheckpointError("container: unsupported version " + std::to_string(version));
  }
  const uint32_t count = r.u32();
  Container c;
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t name_len = r.u32();
    const auto name_bytes = r.blob(name_len);
    const uint64_t payload_len = r.u64();
    auto payload = r.blob(payload_len);
    c.sections[std::string(name_bytes.begin(), name_bytes.end())] = std::move(payload);
  }
  return c;
}

}  // namespace attnlab
