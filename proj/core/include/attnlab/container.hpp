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

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace attnlab {

// Versioned binary file of named byte sections with a trailing CRC-32.
// Layout: magic "ATNLBIN1", u32 version, u32 section count, then per section
// u32 name length + name + u64 payload length + payload, then u32 checksum
// over everything after the magic. All integers little-endian.
struct Container {
  std::map<std::string, std::vector<uint8_t>> sections;

  bool has(const std::string& name) const { return sections.count(name) > 0; }

  void put_bytes(const std::string& name, std::vector<uint8_t> bytes);
  void put_string(const std::string& name, const std::string& s);
  void put_doubles(const std::string& name, const std::vector<double>& v);

  const std::vector<uint8_t>& bytes(const std::string& name) const;
  std::string get_string(const std::string& name) const;
  std::vector<double> get_doubles(const std::string& name) const;
};

void write_container(const std::string& path, const Container& c);

/// Raises CheckpointError on bad magic, version, truncation, or checksum.
Container read_container(const std::string& path);

uint32_t crc32(const uint8_t* data, size_t len, uint32_t seed = 0);

}  // namespace attnlab
