#pragma once

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "gfrls/errors.hpp"
#include "gfrls/estimator.hpp"
#include "gfrls/matrix.hpp"

namespace gfrls {

// Shortest decimal form that parses back to the identical double.
inline std::string format_double(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

inline double parse_double(std::string_view text, int line, int column) {
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw SchemaError("line " + std::to_string(line) + ", column " +
                      std::to_string(column) + ": malformed number '" +
                      std::string(text) + "'");
  }
  return value;
}

// Trace schema, one row per step, LF line endings:
//   k,y_1..y_p,phi_1_1..phi_p_n[,gamma_1_1..gamma_p_p]
// phi and gamma are flattened row-major; the gamma block is optional and
// defaults to the identity on ingestion.
inline std::string trace_header(int n, int p, bool include_gamma) {
  std::string header = "k";
  for (int i = 1; i <= p; ++i) {
    header += ",y_" + std::to_string(i);
  }
  for (int i = 1; i <= p; ++i) {
    for (int j = 1; j <= n; ++j) {
      header += ",phi_" + std::to_string(i) + "_" + std::to_string(j);
    }
  }
  if (include_gamma) {
    for (int i = 1; i <= p; ++i) {
      for (int j = 1; j <= p; ++j) {
        header += ",gamma_" + std::to_string(i) + "_" + std::to_string(j);
      }
    }
  }
  return header;
}

inline void emit_trace(std::ostream& out, const std::vector<Sample>& samples,
                       bool include_gamma) {
  if (samples.empty()) {
    throw EmptySequence("cannot emit an empty trace");
  }
  const int p = samples.front().phi.rows();
  const int n = samples.front().phi.cols();
  out << trace_header(n, p, include_gamma) << "\n";
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const Sample& s = samples[k];
    out << k;
    for (int i = 0; i < p; ++i) {
      out << ',' << format_double(s.y(i));
    }
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < n; ++j) {
        out << ',' << format_double(s.phi.m()(i, j));
      }
    }
    if (include_gamma) {
      for (int i = 0; i < p; ++i) {
        for (int j = 0; j < p; ++j) {
          out << ',' << format_double(s.gamma.m()(i, j));
        }
      }
    }
    out << "\n";
  }
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

}  // namespace detail

inline std::vector<Sample> ingest_trace(std::istream& in, int n, int p) {
  detail::check_dim(n, "parameter");
  detail::check_dim(p, "measurement");

  std::string line;
  if (!std::getline(in, line)) {
    throw SchemaError("line 1: missing header row");
  }
  if (!line.empty() && line.back() == '\r') {
    line.pop_back();
  }
  bool with_gamma = false;
  if (line == trace_header(n, p, true)) {
    with_gamma = true;
  } else if (line != trace_header(n, p, false)) {
    throw SchemaError("line 1: header does not match the trace schema for n=" +
                      std::to_string(n) + ", p=" + std::to_string(p));
  }
  const std::size_t expected_fields =
      1 + static_cast<std::size_t>(p) + static_cast<std::size_t>(p) * n +
      (with_gamma ? static_cast<std::size_t>(p) * p : 0);

  std::vector<Sample> samples;
  int line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    const auto fields = detail::split_csv(line);
    if (fields.size() != expected_fields) {
      throw SchemaError("line " + std::to_string(line_number) + ": expected " +
                        std::to_string(expected_fields) + " fields, found " +
                        std::to_string(fields.size()));
    }
    int column = 1;
    const double k_value = parse_double(fields[0], line_number, column);
    if (k_value != static_cast<double>(samples.size())) {
      throw SchemaError("line " + std::to_string(line_number) +
                        ": step index " + fields[0] + " out of order");
    }
    std::size_t field = 1;
    Vector y(p);
    for (int i = 0; i < p; ++i) {
      y(i) = parse_double(fields[field], line_number, ++column);
      ++field;
    }
    Matrix phi(p, n);
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < n; ++j) {
        phi(i, j) = parse_double(fields[field], line_number, ++column);
        ++field;
      }
    }
    if (with_gamma) {
      Matrix gamma(p, p);
      for (int i = 0; i < p; ++i) {
        for (int j = 0; j < p; ++j) {
          gamma(i, j) = parse_double(fields[field], line_number, ++column);
          ++field;
        }
      }
      try {
        samples.emplace_back(y, RectMatrix(phi), SpdMatrix(SymMatrix(gamma)));
      } catch (const Error& e) {
        throw SchemaError("line " + std::to_string(line_number) +
                          ": invalid weighting matrix: " + e.what());
      }
    } else {
      samples.emplace_back(y, RectMatrix(phi));
    }
  }
  if (samples.empty()) {
    throw SchemaError("trace has a header but no data rows");
  }
  return samples;
}

inline std::vector<Sample> ingest_trace_file(const std::string& path, int n,
                                             int p) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open trace file '" + path + "'");
  }
  return ingest_trace(in, n, p);
}

}  // namespace gfrls
