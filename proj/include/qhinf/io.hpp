#pragma once

#include <cstdio>
#include <fstream>
#include <string>

#include <json.hpp>

#include "qhinf/freq.hpp"
#include "qhinf/types.hpp"

namespace qhinf {

namespace detail {

/// 17 significant digits: enough to round-trip an IEEE double exactly, so
/// re-reading a result file reproduces the matrices bit for bit.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_json_value(std::ostream& os, const nlohmann::ordered_json& j,
                             int indent) {
  const std::string pad(indent, ' ');
  const std::string pad_in(indent + 2, ' ');
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ",\n";
        first = false;
        os << pad_in << nlohmann::ordered_json(it.key()).dump() << ": ";
        write_json_value(os, it.value(), indent + 2);
      }
      os << "\n" << pad << "}";
      return;
    }
    case nlohmann::json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      // pairs and short numeric rows stay on one line
      bool inline_ok = true;
      for (const auto& el : j)
        if (el.is_object() || el.is_array()) inline_ok = false;
      if (inline_ok && j.size() <= 8) {
        os << "[";
        for (size_t i = 0; i < j.size(); ++i) {
          if (i) os << ", ";
          write_json_value(os, j[i], indent);
        }
        os << "]";
        return;
      }
      os << "[\n";
      for (size_t i = 0; i < j.size(); ++i) {
        if (i) os << ",\n";
        os << pad_in;
        write_json_value(os, j[i], indent + 2);
      }
      os << "\n" << pad << "]";
      return;
    }
    case nlohmann::json::value_t::number_float:
      os << format_double(j.get<double>());
      return;
    default:
      os << j.dump();
      return;
  }
}

}  // namespace detail

inline nlohmann::ordered_json complex_to_json(Complex z) {
  return nlohmann::ordered_json::array({z.real(), z.imag()});
}

inline nlohmann::ordered_json matrix_to_json(const Mat& m) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      row.push_back(complex_to_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::ordered_json vector_to_json(const Vec& v) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(complex_to_json(v(i)));
  return out;
}

inline Mat matrix_from_json(const nlohmann::json& j) {
  const auto r = j.size();
  const auto c = j.at(0).size();
  Mat m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  for (size_t i = 0; i < r; ++i)
    for (size_t k = 0; k < c; ++k)
      m(i, k) = Complex(j[i][k][0].get<double>(), j[i][k][1].get<double>());
  return m;
}

inline void write_json_file(const std::string& path,
                            const nlohmann::ordered_json& j) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  detail::write_json_value(os, j, 0);
  os << "\n";
}

/// CSV rows (omega, re, im, magnitude_db) for a scalar-channel response.
inline void write_response_csv(const std::string& path,
                               const FrequencyResponse& fr) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "omega,re,im,magnitude_db\n";
  for (size_t i = 0; i < fr.omegas.size(); ++i) {
    const Complex v = fr.values[i].size() == 1 ? fr.values[i](0, 0)
                                               : Complex(std::nan(""), std::nan(""));
    os << detail::format_double(fr.omegas[i]) << ','
       << detail::format_double(v.real()) << ','
       << detail::format_double(v.imag()) << ','
       << detail::format_double(fr.magnitudes_db[i]) << "\n";
  }
}

}  // namespace qhinf
