#include "cmliv/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "cmliv/common.hpp"

namespace cmliv {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
  return out;
}

double parse_number(const std::string& text, long row, const std::string& column) {
  std::size_t used = 0;
  double v;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw data_error("row " + std::to_string(row) + ", column " + column + ": '" + text +
                     "' is not a number");
  }
  if (used != text.size())
    throw data_error("row " + std::to_string(row) + ", column " + column + ": '" + text +
                     "' is not a number");
  return v;
}

}  // namespace

IvDataset read_dataset_csv(std::istream& in, const CsvReadOptions& opts) {
  std::string line;
  if (!std::getline(in, line)) throw data_error("missing header row");
  const std::vector<std::string> header = split_line(line);

  long col_y = -1, col_d = -1, col_z1 = -1, col_w = -1, col_c = -1;
  std::vector<long> x_cols;  // x_cols[j] = file column of x_{j+1}
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& name = header[c];
    if (name == "y") col_y = c;
    else if (name == "d") col_d = c;
    else if (name == "z1") col_z1 = c;
    else if (name == opts.weight_column) col_w = c;
    else if (name == opts.cluster_column) col_c = c;
    else if (name.rfind("x_", 0) == 0) {
      long j;
      try {
        j = std::stol(name.substr(2));
      } catch (const std::exception&) {
        throw data_error("unexpected column '" + name + "' in header");
      }
      if (j < 1) throw data_error("covariate columns start at x_1, got '" + name + "'");
      if (static_cast<std::size_t>(j) > x_cols.size()) x_cols.resize(j, -1);
      x_cols[j - 1] = c;
    } else {
      throw data_error("unexpected column '" + name + "' in header");
    }
  }
  if (col_y < 0) throw data_error("missing column y");
  if (col_d < 0) throw data_error("missing column d");
  if (col_z1 < 0) throw data_error("missing column z1");
  if (x_cols.empty()) throw data_error("missing covariate columns x_1..x_k");
  for (std::size_t j = 0; j < x_cols.size(); ++j) {
    if (x_cols[j] < 0)
      throw data_error("covariate columns must be contiguous: missing x_" + std::to_string(j + 1));
  }

  std::vector<std::vector<std::string>> rows;
  long row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    auto fields = split_line(line);
    if (fields.size() != header.size())
      throw data_error("row " + std::to_string(row_no) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    rows.push_back(std::move(fields));
  }
  const long n = static_cast<long>(rows.size());
  if (n == 0) throw data_error("file contains a header but no data rows");

  IvDataset ds;
  ds.y.resize(n);
  ds.d.resize(n);
  ds.z1.resize(n);
  ds.x.resize(n, static_cast<long>(x_cols.size()));
  if (col_w >= 0) ds.weight = Eigen::VectorXd(n);
  if (col_c >= 0) ds.cluster = std::vector<long>(n);

  for (long i = 0; i < n; ++i) {
    const long file_row = i + 2;  // header is row 1
    const auto& f = rows[i];
    ds.y[i] = parse_number(f[col_y], file_row, "y");
    ds.d[i] = parse_number(f[col_d], file_row, "d");
    ds.z1[i] = parse_number(f[col_z1], file_row, "z1");
    for (std::size_t j = 0; j < x_cols.size(); ++j) {
      ds.x(i, static_cast<long>(j)) =
          parse_number(f[x_cols[j]], file_row, "x_" + std::to_string(j + 1));
    }
    if (col_w >= 0) (*ds.weight)[i] = parse_number(f[col_w], file_row, opts.weight_column);
    if (col_c >= 0) {
      double v = parse_number(f[col_c], file_row, opts.cluster_column);
      long label = static_cast<long>(v);
      if (static_cast<double>(label) != v)
        throw data_error("row " + std::to_string(file_row) + ", column " + opts.cluster_column +
                         ": cluster labels must be integers");
      (*ds.cluster)[i] = label;
    }
  }
  return ds;
}

IvDataset read_dataset_csv_file(const std::string& path, const CsvReadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open '" + path + "' for reading");
  return read_dataset_csv(in, opts);
}

std::string format_double17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_dataset_csv(const IvDataset& ds, std::ostream& out) {
  out << "y,d,z1";
  for (long j = 0; j < ds.x.cols(); ++j) out << ",x_" << (j + 1);
  if (ds.weight) out << ",weight";
  if (ds.cluster) out << ",cluster";
  out << "\n";
  for (long i = 0; i < ds.n(); ++i) {
    out << format_double17(ds.y[i]) << ',' << format_double17(ds.d[i]) << ','
        << format_double17(ds.z1[i]);
    for (long j = 0; j < ds.x.cols(); ++j) out << ',' << format_double17(ds.x(i, j));
    if (ds.weight) out << ',' << format_double17((*ds.weight)[i]);
    if (ds.cluster) out << ',' << (*ds.cluster)[i];
    out << "\n";
  }
}

void write_dataset_csv_file(const IvDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot open '" + path + "' for writing");
  write_dataset_csv(ds, out);
  out.flush();
  if (!out) throw data_error("failed writing '" + path + "'");
}

}  // namespace cmliv
