// Copyright 2025 Qilimanjaro Quantum Tech
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "molat/propagator.hpp"

namespace molat {

// Shortest decimal that parses back to the same double (std::to_chars).
// Non-finite values print as nan / inf / -inf.
std::string format_double(double v);

// Column-oriented CSV. All columns must have the same length.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  Table& add(std::string name, std::vector<double> values);
  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
  std::string to_csv() const;
};

// Parses what to_csv writes (used by tests and the C API round trip).
Table parse_csv(std::string_view text);

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
  bool markers = false;  // scatter instead of polyline
  bool dashed = false;
};

struct PlotSpec {
  std::string title, xlabel, ylabel;
  std::vector<PlotSeries> series;
  int width = 720, height = 480;
};

// Self-contained SVG with linear axes, ticks and a legend.
std::string render_svg(const PlotSpec& spec);

// Little-endian snapshot: magic "MOLATWF1", int32 n, int32 2F+1, float64 z0,
// dz, t, then complex64 samples, one spin component after another.
std::string wavefunction_snapshot(const SpinorWavefunction& w, double t);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

// Writes to a sibling temporary and renames it over `path`. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

struct OutputFile {
  std::string name;  // relative to the run directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

// One run directory. Each file goes through write(), which records its hash
// for the manifest.
class RunOutput {
 public:
  explicit RunOutput(std::filesystem::path dir);
  void write(const std::string& name, std::string_view content);
  const std::filesystem::path& dir() const { return dir_; }
  const std::vector<OutputFile>& files() const { return files_; }

 private:
  std::filesystem::path dir_;
  std::vector<OutputFile> files_;
};

}  // namespace molat
