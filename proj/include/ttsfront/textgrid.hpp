#pragma once

// Praat TextGrid reader. Handles both the long ("verbose") and short
// text forms, interval tiers only. Point tiers (TextTier) are rejected
// with a parse error naming the line.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "ttsfront/common.hpp"

namespace ttsfront::textgrid {

struct Interval {
  double start_s = 0.0;
  double end_s = 0.0;
  std::string label;
};

struct Tier {
  std::string name;
  double xmin = 0.0;
  double xmax = 0.0;
  std::vector<Interval> intervals;
};

class ParseError : public DataError {
 public:
  ParseError(int line, const std::string& msg)
      : DataError("TextGrid parse error at line " + std::to_string(line) +
                  ": " + msg),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

// Walks significant lines and decodes payloads. In the long form a
// value line looks like `xmin = 0.5` or `text = "a"`; in the short form
// it is the bare payload. Structural lines (`item [1]:`) are skipped.
class Cursor {
 public:
  explicit Cursor(const std::string& text) {
    size_t pos = 0;
    int line_no = 0;
    while (pos <= text.size()) {
      size_t nl = text.find('\n', pos);
      std::string line = text.substr(
          pos, nl == std::string::npos ? std::string::npos : nl - pos);
      ++line_no;
      lines_.push_back({line_no, line});
      if (nl == std::string::npos) break;
      pos = nl + 1;
    }
  }

  // Raw line access for the two header lines.
  std::string raw_line(size_t idx) const {
    return idx < lines_.size() ? lines_[idx].text : "";
  }
  void set_position(size_t idx) { next_ = idx; }

  int current_line() const {
    return next_ < lines_.size() ? lines_[next_].no
                                 : (lines_.empty() ? 1 : lines_.back().no);
  }

  bool next_payload(std::string* payload, int* line_no) {
    while (next_ < lines_.size()) {
      const auto& ln = lines_[next_++];
      std::string t = trim(ln.text);
      if (t.empty()) continue;
      // Flag lines carry <exists>/<absent> with optional prefix text.
      if (t.find("<exists>") != std::string::npos ||
          t.find("<absent>") != std::string::npos) {
        *payload = t.find("<exists>") != std::string::npos ? "<exists>"
                                                           : "<absent>";
        *line_no = ln.no;
        return true;
      }
      size_t eq = t.find('=');
      if (eq != std::string::npos) {
        *payload = trim(t.substr(eq + 1));
        *line_no = ln.no;
        return true;
      }
      // Structural long-form line: `item []:`, `intervals [1]:` ...
      if (t.back() == ':') continue;
      *payload = t;
      *line_no = ln.no;
      return true;
    }
    return false;
  }

  double next_number(const std::string& what) {
    std::string p;
    int line;
    if (!next_payload(&p, &line))
      throw ParseError(current_line(), "unexpected end of file, expected " +
                                           what);
    const char* begin = p.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin || trim(std::string(end)) != "")
      throw ParseError(line, "expected " + what + ", got '" + p + "'");
    return v;
  }

  std::string next_string(const std::string& what, int* at_line = nullptr) {
    std::string p;
    int line;
    if (!next_payload(&p, &line))
      throw ParseError(current_line(), "unexpected end of file, expected " +
                                           what);
    if (at_line) *at_line = line;
    if (p.empty() || p.front() != '"')
      throw ParseError(line, "expected quoted " + what + ", got '" + p + "'");
    // Doubled quotes are Praat's escape for a literal quote.
    std::string out;
    size_t i = 1;
    while (i < p.size()) {
      if (p[i] == '"') {
        if (i + 1 < p.size() && p[i + 1] == '"') {
          out.push_back('"');
          i += 2;
        } else {
          return out;
        }
      } else {
        out.push_back(p[i]);
        ++i;
      }
    }
    throw ParseError(line, "unterminated string for " + what);
  }

  bool next_flag(const std::string& what) {
    std::string p;
    int line;
    if (!next_payload(&p, &line))
      throw ParseError(current_line(), "unexpected end of file, expected " +
                                           what);
    if (p == "<exists>") return true;
    if (p == "<absent>") return false;
    throw ParseError(line, "expected <exists>/<absent> for " + what +
                               ", got '" + p + "'");
  }

 private:
  struct Line {
    int no;
    std::string text;
  };
  std::vector<Line> lines_;
  size_t next_ = 0;
};

}  // namespace detail

inline std::vector<Tier> parse(const std::string& text_in) {
  std::string text = text_in;
  if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF &&
      static_cast<unsigned char>(text[1]) == 0xBB &&
      static_cast<unsigned char>(text[2]) == 0xBF)
    text = text.substr(3);  // UTF-8 BOM

  detail::Cursor cur(text);
  if (detail::trim(cur.raw_line(0)).find("File type = \"ooTextFile\"") ==
      std::string::npos)
    throw ParseError(1, "not a TextGrid: missing ooTextFile header");
  if (detail::trim(cur.raw_line(1)).find("Object class = \"TextGrid\"") ==
      std::string::npos)
    throw ParseError(2, "not a TextGrid: missing Object class header");
  cur.set_position(2);

  cur.next_number("file xmin");
  cur.next_number("file xmax");
  bool has_tiers = cur.next_flag("tiers flag");
  std::vector<Tier> tiers;
  if (!has_tiers) return tiers;
  double n_tiers_raw = cur.next_number("tier count");
  long n_tiers = std::lround(n_tiers_raw);
  if (n_tiers < 0) throw ParseError(cur.current_line(), "negative tier count");

  for (long ti = 0; ti < n_tiers; ++ti) {
    int class_line = 0;
    std::string tier_class = cur.next_string("tier class", &class_line);
    if (tier_class == "TextTier")
      throw ParseError(class_line,
                       "point tiers (TextTier) are not supported; only "
                       "interval tiers can be read");
    if (tier_class != "IntervalTier")
      throw ParseError(class_line, "unknown tier class '" + tier_class + "'");
    Tier tier;
    tier.name = cur.next_string("tier name");
    tier.xmin = cur.next_number("tier xmin");
    tier.xmax = cur.next_number("tier xmax");
    long n_intervals = std::lround(cur.next_number("interval count"));
    if (n_intervals < 0)
      throw ParseError(cur.current_line(), "negative interval count");
    double prev_end = -1.0;
    for (long ii = 0; ii < n_intervals; ++ii) {
      Interval iv;
      int line = cur.current_line();
      iv.start_s = cur.next_number("interval xmin");
      iv.end_s = cur.next_number("interval xmax");
      iv.label = cur.next_string("interval text");
      if (!(iv.end_s > iv.start_s))
        throw ParseError(line, "non-monotone interval boundaries (xmax <= "
                               "xmin) in tier '" + tier.name + "'");
      if (ii > 0 && iv.start_s < prev_end)
        throw ParseError(line, "overlapping intervals in tier '" + tier.name +
                                   "'");
      prev_end = iv.end_s;
      tier.intervals.push_back(std::move(iv));
    }
    tiers.push_back(std::move(tier));
  }
  return tiers;
}

// Long-form writer; numbers keep full double precision so that
// parse(serialize(x)) reproduces times exactly.
inline std::string serialize(const std::vector<Tier>& tiers) {
  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  auto quote = [](const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
      out.push_back(c);
      if (c == '"') out.push_back('"');
    }
    out.push_back('"');
    return out;
  };
  double xmin = 0.0, xmax = 0.0;
  for (const auto& t : tiers) {
    xmin = std::min(xmin, t.xmin);
    xmax = std::max(xmax, t.xmax);
  }
  std::string out;
  out += "File type = \"ooTextFile\"\n";
  out += "Object class = \"TextGrid\"\n\n";
  out += "xmin = " + num(xmin) + "\n";
  out += "xmax = " + num(xmax) + "\n";
  out += "tiers? <exists>\n";
  out += "size = " + std::to_string(tiers.size()) + "\n";
  out += "item []:\n";
  for (size_t ti = 0; ti < tiers.size(); ++ti) {
    const Tier& t = tiers[ti];
    out += "    item [" + std::to_string(ti + 1) + "]:\n";
    out += "        class = \"IntervalTier\"\n";
    out += "        name = " + quote(t.name) + "\n";
    out += "        xmin = " + num(t.xmin) + "\n";
    out += "        xmax = " + num(t.xmax) + "\n";
    out += "        intervals: size = " + std::to_string(t.intervals.size()) +
           "\n";
    for (size_t ii = 0; ii < t.intervals.size(); ++ii) {
      const Interval& iv = t.intervals[ii];
      out += "        intervals [" + std::to_string(ii + 1) + "]:\n";
      out += "            xmin = " + num(iv.start_s) + "\n";
      out += "            xmax = " + num(iv.end_s) + "\n";
      out += "            text = " + quote(iv.label) + "\n";
    }
  }
  return out;
}

}  // namespace ttsfront::textgrid
