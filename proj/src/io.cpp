#include "wlr/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

#include "wlr/error.hpp"

namespace wlr::io {

namespace {

std::string trim_ws(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& token, std::size_t line_no) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || trim_ws(token.substr(used)).size() != 0 || !std::isfinite(v)) {
    fail(ErrorCode::kInvalidInput,
         "line " + std::to_string(line_no) + ": bad number '" + token + "'");
  }
  return v;
}

long long parse_int(const std::string& token, std::size_t line_no) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(token, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != token.size()) {
    fail(ErrorCode::kInvalidInput,
         "line " + std::to_string(line_no) + ": bad integer '" + token + "'");
  }
  return v;
}

}  // namespace

void write_provenance(std::ostream& out, const Provenance& p) {
  out << "# scenario=" << p.scenario << " seed=" << p.seed << " config_hash=" << p.config_hash
      << '\n';
}

void write_dense_csv(std::ostream& out, const DenseMatrix& a) {
  out << std::setprecision(17);
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      if (j > 0) out << ',';
      out << a(i, j);
    }
    out << '\n';
  }
}

DenseMatrix read_dense_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim_ws(line);
    if (t.empty() || t[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(t);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(parse_double(trim_ws(cell), line_no));
    if (!rows.empty() && row.size() != rows.front().size()) {
      fail(ErrorCode::kInvalidInput, "line " + std::to_string(line_no) + ": ragged CSV row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorCode::kInvalidInput, "CSV holds no rows");
  DenseMatrix a(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) a(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return a;
}

void write_matrix_market(std::ostream& out, const SparseObservation& obs) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << obs.n_rows() << ' ' << obs.n_cols() << ' ' << obs.size() << '\n';
  out << std::setprecision(17);
  for (const auto& t : obs.triplets()) {
    out << t.row + 1 << ' ' << t.col + 1 << ' ' << t.value << '\n';
  }
}

SparseObservation read_matrix_market(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) fail(ErrorCode::kInvalidInput, "empty MatrixMarket file");
  ++line_no;
  {
    std::stringstream ss(line);
    std::string banner, object, format, field, symmetry;
    ss >> banner >> object >> format >> field >> symmetry;
    for (auto* s : {&object, &format, &field, &symmetry}) {
      for (auto& ch : *s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
    if (banner != "%%MatrixMarket" || object != "matrix" || format != "coordinate" ||
        field != "real" || symmetry != "general") {
      fail(ErrorCode::kInvalidInput, "expected '%%MatrixMarket matrix coordinate real general'");
    }
  }
  long long n1 = -1, n2 = -1, nnz = -1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim_ws(line);
    if (t.empty() || t[0] == '%') continue;
    std::stringstream ss(t);
    std::string a, b, c;
    ss >> a >> b >> c;
    n1 = parse_int(a, line_no);
    n2 = parse_int(b, line_no);
    nnz = parse_int(c, line_no);
    break;
  }
  if (n1 < 1 || n2 < 1 || nnz < 0) fail(ErrorCode::kInvalidDims, "bad MatrixMarket size line");
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(nnz));
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim_ws(line);
    if (t.empty() || t[0] == '%') continue;
    std::stringstream ss(t);
    std::string a, b, c;
    ss >> a >> b >> c;
    const long long i = parse_int(a, line_no);
    const long long j = parse_int(b, line_no);
    if (i < 1 || i > n1 || j < 1 || j > n2) {
      fail(ErrorCode::kInvalidInput, "line " + std::to_string(line_no) + ": index out of range");
    }
    triplets.push_back({static_cast<Index>(i - 1), static_cast<Index>(j - 1),
                        parse_double(c, line_no)});
  }
  if (static_cast<long long>(triplets.size()) != nnz) {
    fail(ErrorCode::kInvalidInput, "MatrixMarket entry count does not match header");
  }
  return SparseObservation(static_cast<Index>(n1), static_cast<Index>(n2), std::move(triplets));
}

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  return in;
}

}  // namespace

DenseMatrix load_dense_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_dense_csv(in);
}

SparseObservation load_matrix_market(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_matrix_market(in);
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  return out;
}

std::map<std::string, std::string> parse_key_value(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string t = trim_ws(line.substr(0, hash));
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos || trim_ws(t.substr(0, eq)).empty()) {
      fail(ErrorCode::kInvalidInput, "config line " + std::to_string(line_no) + ": expected key=value");
    }
    out[trim_ws(t.substr(0, eq))] = trim_ws(t.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> load_key_value(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_key_value(in);
}

std::string config_hash(const std::map<std::string, std::string>& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const std::string& s) {
    for (const unsigned char ch : s) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [key, value] : config) feed(key + "=" + value + "\n");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace wlr::io
