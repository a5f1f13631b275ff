// Copyright 2026 The doorfeel Authors
// SPDX-License-Identifier: Apache-2.0

#include "doorfeel/ratings.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include "doorfeel/error.hpp"
#include "text_util.hpp"

namespace doorfeel {

namespace {

constexpr std::array<AdjectivePair, kNumPairs> kPairs{{
    {"Jerky", "Easy-to-operate"},
    {"Smooth", "Rough"},
    {"Frictional", "Frictionless"},
    {"Hard-to-pull", "Easy-to-open"},
    {"Balanced", "Unstable"},
    {"Soft", "Hard"},
    {"Cheap", "Classy"},
    {"Damped", "Recoiling"},
    {"Discordant", "Consistent"},
    {"Heavy", "Light"},
}};

constexpr std::array<std::string_view, kNumPairs> kLabels{
    "jerky_easy",      "smooth_rough",    "frictional_frictionless", "hard_easy",
    "balanced_unstable", "soft_hard",     "cheap_classy",            "damped_recoiling",
    "discordant_consistent", "heavy_light"};

void require_same_car(std::span<const RawLikertSheet> sheets) {
  for (const auto& s : sheets) {
    s.validate();
    if (s.car_id != sheets.front().car_id) {
      throw ValidationError("ratings: sheets mix cars '" + sheets.front().car_id + "' and '" +
                            s.car_id + "'");
    }
  }
}

}  // namespace

std::span<const AdjectivePair, kNumPairs> adjective_pairs() { return kPairs; }

std::string pair_label(std::size_t index) {
  if (index >= kNumPairs) throw ValidationError("pair index out of range");
  return std::string(kLabels[index]);
}

void RatingVector::validate() const {
  const double hi = scale == RatingScale::Percent ? 100.0 : 1.0;
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0 || v > hi) {
      throw ValidationError("rating for car '" + car_id + "' out of range");
    }
  }
}

void RawLikertSheet::validate() const {
  for (int s : scores) {
    if (s < 1 || s > 7) {
      throw ValidationError("Likert score " + std::to_string(s) + " outside 1..7 (car '" + car_id +
                            "', participant '" + participant_id + "')");
    }
  }
}

double likert_to_percent(int score) {
  if (score < 1 || score > 7) {
    throw ValidationError("Likert score " + std::to_string(score) + " outside 1..7");
  }
  return static_cast<double>(score - 1) * 100.0 / 6.0;
}

RatingVector average_ratings(std::span<const RawLikertSheet> sheets) {
  if (sheets.empty()) throw ValidationError("average_ratings: no sheets");
  require_same_car(sheets);
  RatingVector out;
  out.car_id = sheets.front().car_id;
  for (std::size_t p = 0; p < kNumPairs; ++p) {
    double sum = 0.0;
    for (const auto& s : sheets) sum += likert_to_percent(s.scores[p]);
    out.values[p] = sum / static_cast<double>(sheets.size());
  }
  return out;
}

std::array<double, kNumPairs> rating_dispersion(std::span<const RawLikertSheet> sheets) {
  if (sheets.size() < 2) throw ValidationError("rating_dispersion: at least 2 sheets required");
  require_same_car(sheets);
  const auto mean = average_ratings(sheets);
  std::array<double, kNumPairs> sigma{};
  for (std::size_t p = 0; p < kNumPairs; ++p) {
    double ss = 0.0;
    for (const auto& s : sheets) {
      const double d = likert_to_percent(s.scores[p]) - mean.values[p];
      ss += d * d;
    }
    sigma[p] = std::sqrt(ss / static_cast<double>(sheets.size()));
  }
  return sigma;
}

std::optional<double> RatingsTable::mean_dispersion() const {
  std::map<std::string, std::vector<RawLikertSheet>> grouped;
  for (const auto& s : sheets) grouped[s.car_id].push_back(s);
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& [car, group] : grouped) {
    if (group.size() < 2) continue;
    for (double s : rating_dispersion(group)) {
      sum += s;
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

RatingsTable parse_ratings_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string_view> header;
  std::string header_text;
  bool likert = false;
  RatingsTable table;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    if (header.empty()) {
      header_text = std::string(text);
      header = detail::split_csv(header_text);
      const std::size_t lead = header.size() == kNumPairs + 2 ? 2 : 1;
      likert = lead == 2;
      bool ok = header.size() == kNumPairs + lead && header[0] == "car_id" &&
                (!likert || header[1] == "participant_id");
      for (std::size_t p = 0; ok && p < kNumPairs; ++p) {
        ok = header[lead + p] == "p" + std::to_string(p + 1);
      }
      if (!ok) {
        throw ParseError("expected header 'car_id[,participant_id],p1..p10'", line_no);
      }
      continue;
    }
    const auto fields = detail::split_csv(text);
    if (fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()),
                       line_no);
    }
    const std::string car(fields[0]);
    if (car.empty()) throw ParseError("empty car_id", line_no);
    if (likert) {
      RawLikertSheet sheet{car, std::string(fields[1]), {}};
      for (std::size_t p = 0; p < kNumPairs; ++p) {
        sheet.scores[p] = static_cast<int>(detail::parse_int(fields[2 + p], line_no));
      }
      try {
        sheet.validate();
      } catch (const ValidationError& e) {
        throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
      }
      table.sheets.push_back(std::move(sheet));
    } else {
      if (table.by_car.contains(car)) {
        throw ValidationError("line " + std::to_string(line_no) + ": duplicate car '" + car + "'");
      }
      RatingVector r;
      r.car_id = car;
      for (std::size_t p = 0; p < kNumPairs; ++p) r.values[p] = detail::parse_double(fields[1 + p], line_no);
      try {
        r.validate();
      } catch (const ValidationError& e) {
        throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
      }
      table.by_car.emplace(car, r);
    }
  }
  if (header.empty()) throw ParseError("ratings: missing header");
  if (likert) {
    std::map<std::string, std::vector<RawLikertSheet>> grouped;
    for (const auto& s : table.sheets) grouped[s.car_id].push_back(s);
    for (const auto& [car, group] : grouped) table.by_car.emplace(car, average_ratings(group));
  }
  if (table.by_car.empty()) throw ValidationError("ratings: empty body");
  return table;
}

RatingsTable parse_ratings_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return parse_ratings_csv(in);
}

void write_averaged_ratings_csv(std::ostream& out, std::span<const RatingVector> ratings) {
  out << "car_id";
  for (std::size_t p = 0; p < kNumPairs; ++p) out << ",p" << p + 1;
  out << '\n';
  for (const auto& r : ratings) {
    r.validate();
    out << r.car_id;
    for (double v : r.values) out << ',' << detail::format_double(v);
    out << '\n';
  }
}

void write_catalog_csv(std::ostream& out) {
  out << "index,label,negative_pole,positive_pole\n";
  for (std::size_t p = 0; p < kNumPairs; ++p) {
    out << p + 1 << ',' << kLabels[p] << ',' << kPairs[p].negative_pole << ','
        << kPairs[p].positive_pole << '\n';
  }
}

}  // namespace doorfeel
