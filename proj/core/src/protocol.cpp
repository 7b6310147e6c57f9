// Copyright 2026 The cladlab Authors
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

#include <fstream>
#include <sstream>

#include "cladlab/dataset.hpp"
#include "cladlab/errors.hpp"

namespace cladlab {
namespace fs = std::filesystem;

std::vector<ProtocolEntry> parse_protocol_file(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open protocol file '" + file.string() + "'");
  std::vector<ProtocolEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::vector<std::string> cols;
    for (std::string tok; ss >> tok;) cols.push_back(std::move(tok));
    if (cols.empty()) continue;
    if (cols.size() != 5) {
      throw ParseError("expected 5 columns, found " + std::to_string(cols.size()), line_no);
    }
    ProtocolEntry e;
    e.speaker_id = cols[0];
    e.utterance_id = cols[1];
    e.system_id = cols[3];
    if (cols[4] == "bonafide") {
      e.label = 1;
    } else if (cols[4] == "spoof") {
      e.label = 0;
    } else {
      throw ParseError("unknown key '" + cols[4] + "' (expected bonafide or spoof)", line_no);
    }
    out.push_back(std::move(e));
  }
  return out;
}

void write_protocol_file(const std::vector<ProtocolEntry>& entries, const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot open '" + file.string() + "' for writing");
  for (const ProtocolEntry& e : entries) {
    out << e.speaker_id << ' ' << e.utterance_id << " - " << e.system_id << ' '
        << (e.label == 1 ? "bonafide" : "spoof") << '\n';
  }
  if (!out) throw IoError("failed writing '" + file.string() + "'");
}

namespace {

fs::path find_protocol(const fs::path& dir) {
  if (fs::is_regular_file(dir / "protocol.txt")) return dir / "protocol.txt";
  std::vector<fs::path> candidates;
  if (fs::is_directory(dir)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".txt") candidates.push_back(entry.path());
    }
  }
  if (candidates.size() != 1) {
    throw LookupError("no unique protocol file (protocol.txt or a single *.txt) in '" + dir.string() + "'");
  }
  return candidates.front();
}

}  // namespace

Dataset parse_protocol(const fs::path& dir) {
  const std::vector<ProtocolEntry> entries = parse_protocol_file(find_protocol(dir));
  Dataset out;
  std::vector<std::string> missing;
  for (const ProtocolEntry& e : entries) {
    fs::path wav = dir / "wav" / (e.utterance_id + ".wav");
    if (!fs::is_regular_file(wav)) wav = dir / (e.utterance_id + ".wav");
    if (!fs::is_regular_file(wav)) {
      missing.push_back(e.utterance_id);
      continue;
    }
    out.push_back({e.utterance_id, e.label, read_wav(wav), e.system_id});
  }
  if (!missing.empty()) {
    std::string msg = "unresolved audio for " + std::to_string(missing.size()) + " utterance(s):";
    for (std::size_t i = 0; i < missing.size() && i < 10; ++i) msg += " " + missing[i];
    if (missing.size() > 10) msg += " ...";
    throw LookupError(msg);
  }
  return out;
}

void write_protocol_dataset(const Dataset& data, const fs::path& dir) {
  fs::create_directories(dir / "wav");
  std::vector<ProtocolEntry> entries;
  entries.reserve(data.size());
  for (const LabeledSample& s : data) {
    entries.push_back({"SPK_0000", s.id, s.system_id.empty() ? "-" : s.system_id, s.label});
    write_wav(s.audio, dir / "wav" / (s.id + ".wav"));
  }
  write_protocol_file(entries, dir / "protocol.txt");
}

}  // namespace cladlab
