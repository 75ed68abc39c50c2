#pragma once

#include <cctype>
#include <charconv>
#include <string>
#include <string_view>

#include "mobjust/error.hpp"
#include "mobjust/format.hpp"
#include "mobjust/geo.hpp"

namespace mobjust {

namespace detail {

class WktReader {
 public:
  explicit WktReader(std::string_view text) : text_(text) {}

  MultiPolygon parse() {
    const std::string tag = keyword();
    MultiPolygon out;
    if (tag == "POLYGON") {
      out.push_back(polygon());
    } else if (tag == "MULTIPOLYGON") {
      expect('(');
      out.push_back(polygon());
      while (accept(',')) out.push_back(polygon());
      expect(')');
    } else {
      fail("expected POLYGON or MULTIPOLYGON");
    }
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters");
    return out;
  }

 private:
  [[noreturn]] void fail(std::string_view msg) const {
    throw Error(ErrorKind::MalformedWkt,
                std::string(msg) + " at offset " + std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  std::string keyword() {
    skip_ws();
    std::string word;
    while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) {
      word.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(text_[pos_]))));
      ++pos_;
    }
    return word;
  }

  double number() {
    skip_ws();
    double v = 0.0;
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{}) fail("expected number");
    pos_ += static_cast<std::size_t>(ptr - first);
    return v;
  }

  Ring ring() {
    expect('(');
    Ring r;
    do {
      const double lon = number();
      const double lat = number();
      GeoPoint p{lat, lon};
      if (!is_valid(p)) fail("coordinate out of range");
      r.push_back(p);
    } while (accept(','));
    expect(')');
    if (r.size() < 4) fail("ring needs at least 4 vertices");
    if (!(r.front() == r.back())) fail("ring is not closed");
    return r;
  }

  Polygon polygon() {
    expect('(');
    Polygon poly;
    poly.exterior = ring();
    while (accept(',')) poly.holes.push_back(ring());
    expect(')');
    return poly;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

inline void append_ring(std::string& out, const Ring& ring) {
  out.push_back('(');
  for (std::size_t i = 0; i < ring.size(); ++i) {
    if (i) out += ", ";
    out += format_double(ring[i].lon);
    out.push_back(' ');
    out += format_double(ring[i].lat);
  }
  out.push_back(')');
}

inline void append_polygon(std::string& out, const Polygon& poly) {
  out.push_back('(');
  append_ring(out, poly.exterior);
  for (const auto& hole : poly.holes) {
    out += ", ";
    append_ring(out, hole);
  }
  out.push_back(')');
}

}  // namespace detail

/// Parses POLYGON or MULTIPOLYGON text (x = lon, y = lat). Throws
/// Error(MalformedWkt) on syntax errors, open rings or short rings.
inline MultiPolygon parse_wkt(std::string_view text) {
  return detail::WktReader(text).parse();
}

inline std::string to_wkt(const MultiPolygon& mp) {
  std::string out;
  if (mp.size() == 1) {
    out = "POLYGON ";
    detail::append_polygon(out, mp.front());
    return out;
  }
  out = "MULTIPOLYGON (";
  for (std::size_t i = 0; i < mp.size(); ++i) {
    if (i) out += ", ";
    detail::append_polygon(out, mp[i]);
  }
  out.push_back(')');
  return out;
}

}  // namespace mobjust
