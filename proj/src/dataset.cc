/*
 * Copyright 2026 The Adaptex Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "adaptex/dataset.h"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "adaptex/common.h"

namespace adaptex {

namespace {

const char* kPhaseNames[] = {"pre", "post"};
const char* kTypeNames[] = {"false", "true"};
const char* kChannelNames[] = {"timeline", "messenger"};

std::string DetailColumnName(int cell) {
  const int phase = cell / 8, type = (cell / 4) % 2, stimulus = (cell / 2) % 2,
            channel = cell % 2;
  return std::string(kPhaseNames[phase]) + "_" + kTypeNames[type] + "_s" +
         std::to_string(stimulus + 1) + "_" + kChannelNames[channel];
}

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

int ParseInt(const std::string& s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    ThrowData("expected an integer, got '" + s + "'");
  }
  return v;
}

std::int64_t ParseInt64(const std::string& s) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    ThrowData("expected an integer, got '" + s + "'");
  }
  return v;
}

std::vector<std::string> SplitOn(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream ss(s);
  while (std::getline(ss, part, sep)) parts.push_back(part);
  return parts;
}

}  // namespace

Dataset Dataset::Completed() const {
  Dataset out;
  out.arms = arms;
  out.feature_names = feature_names;
  for (const auto& u : units) {
    if (u.outcome.completed) out.units.push_back(u);
  }
  return out;
}

std::string FormatDouble(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error(ErrorKind::kInternal, "to_chars failed");
  return std::string(buf, ptr);
}

double ParseDouble(const std::string& s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    ThrowData("expected a number, got '" + s + "'");
  }
  return v;
}

void WriteDatasetCsv(const Dataset& data, std::ostream& out) {
  out << "unit_id,batch,arm_respondent,arm_headline";
  for (int k = 0; k < data.n_arms(); ++k) {
    const Arm& a = data.arms.arm(k);
    out << ",e:" << data.arms.name(k) << ':' << a.respondent_level << ':'
        << a.headline_level;
  }
  out << ",M_pre,T_pre,M_post,T_post";
  for (int c = 0; c < kChannelDetailSize; ++c) out << ',' << DetailColumnName(c);
  out << ",completed";
  for (const auto& f : data.feature_names) out << ",x:" << f;
  out << '\n';

  for (const auto& u : data.units) {
    const Arm& a = data.arms.arm(u.arm);
    out << u.unit_id << ',' << u.batch << ',' << a.respondent_level << ','
        << a.headline_level;
    for (double p : u.propensities) out << ',' << FormatDouble(p);
    const OutcomeRecord& o = u.outcome;
    out << ',' << o.m_pre << ',' << o.t_pre;
    if (o.completed) {
      out << ',' << o.m_post << ',' << o.t_post;
    } else {
      out << ",NA,NA";
    }
    for (int c = 0; c < kChannelDetailSize; ++c) {
      out << ',';
      if (!o.channel_detail || (!o.completed && c >= 8)) {
        out << "NA";
      } else {
        out << int((*o.channel_detail)[c]);
      }
    }
    out << ',' << (o.completed ? 1 : 0);
    for (double x : u.context.features) out << ',' << FormatDouble(x);
    out << '\n';
  }
}

Dataset ReadDatasetCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) ThrowData("dataset CSV is empty");
  const auto header = SplitCsvLine(line);
  if (header.size() < 4 || header[0] != "unit_id" || header[1] != "batch" ||
      header[2] != "arm_respondent" || header[3] != "arm_headline") {
    ThrowData("dataset CSV header does not start with unit_id,batch,"
              "arm_respondent,arm_headline");
  }

  Dataset data;
  std::vector<std::pair<std::string, Arm>> arms;
  std::size_t col = 4;
  while (col < header.size() && header[col].rfind("e:", 0) == 0) {
    const auto parts = SplitOn(header[col].substr(2), ':');
    if (parts.size() != 3) ThrowData("bad propensity column '" + header[col] + "'");
    arms.push_back({parts[0], {ParseInt(parts[1]), ParseInt(parts[2])}});
    ++col;
  }
  if (arms.empty()) ThrowData("dataset CSV has no propensity columns");
  data.arms = ArmSpace::Flat(arms);
  // Recover the factorial flag when the arms form a full cross product.
  {
    int r_max = 0, h_max = 0;
    for (const auto& a : data.arms.arms()) {
      r_max = std::max(r_max, a.respondent_level);
      h_max = std::max(h_max, a.headline_level);
    }
    if ((r_max + 1) * (h_max + 1) == data.arms.size()) {
      ArmSpace f = ArmSpace::Factorial(r_max + 1, h_max + 1);
      if (f == data.arms) data.arms = f;
    }
  }

  const std::vector<std::string> fixed = {"M_pre", "T_pre", "M_post", "T_post"};
  for (const auto& name : fixed) {
    if (col >= header.size() || header[col] != name) {
      ThrowData("expected column '" + name + "'");
    }
    ++col;
  }
  for (int c = 0; c < kChannelDetailSize; ++c, ++col) {
    if (col >= header.size() || header[col] != DetailColumnName(c)) {
      ThrowData("expected column '" + DetailColumnName(c) + "'");
    }
  }
  if (col >= header.size() || header[col] != "completed") {
    ThrowData("expected column 'completed'");
  }
  ++col;
  for (; col < header.size(); ++col) {
    if (header[col].rfind("x:", 0) != 0) {
      ThrowData("unexpected column '" + header[col] + "'");
    }
    data.feature_names.push_back(header[col].substr(2));
  }

  const int k = data.n_arms();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = SplitCsvLine(line);
    if (f.size() != header.size()) {
      ThrowData("row has " + std::to_string(f.size()) + " fields, expected " +
                std::to_string(header.size()));
    }
    UnitRecord u;
    u.unit_id = ParseInt64(f[0]);
    u.batch = ParseInt(f[1]);
    u.arm = data.arms.IndexOf({ParseInt(f[2]), ParseInt(f[3])});
    if (u.arm < 0) ThrowData("row arm not in the arm space");
    std::size_t c = 4;
    for (int a = 0; a < k; ++a) u.propensities.push_back(ParseDouble(f[c++]));
    OutcomeRecord& o = u.outcome;
    o.completed = ParseInt(f[4 + k + 4 + kChannelDetailSize]) != 0;
    o.m_pre = ParseInt(f[c++]);
    o.t_pre = ParseInt(f[c++]);
    o.m_post = o.completed ? ParseInt(f[c]) : 0;
    o.t_post = o.completed ? ParseInt(f[c + 1]) : 0;
    c += 2;
    if (f[c] != "NA") {
      ChannelDetail d{};
      for (int i = 0; i < kChannelDetailSize; ++i) {
        d[i] = (f[c + i] == "NA") ? 0 : static_cast<std::uint8_t>(ParseInt(f[c + i]));
      }
      o.channel_detail = d;
    }
    c += kChannelDetailSize + 1;
    for (; c < f.size(); ++c) u.context.features.push_back(ParseDouble(f[c]));
    u.context.pretest_false_stratum = o.m_pre;
    u.context.pretest_true_stratum = o.t_pre;
    o.Validate();
    data.units.push_back(std::move(u));
  }
  return data;
}

Dataset LoadDatasetCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) ThrowData("cannot open dataset '" + path + "'");
  return ReadDatasetCsv(in);
}

void SaveDatasetCsv(const Dataset& data, const std::string& path) {
  std::ostringstream out;
  WriteDatasetCsv(data, out);
  WriteFileAtomically(path, out.str());
}

void WriteFileAtomically(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) ThrowData("cannot write '" + tmp + "'");
    out << contents;
    out.flush();
    if (!out) ThrowData("write to '" + tmp + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) ThrowData("rename to '" + path + "' failed: " + ec.message());
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) ThrowData("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace adaptex
