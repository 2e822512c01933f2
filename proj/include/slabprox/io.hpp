#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "slabprox/linmodel.hpp"
#include "slabprox/sampler.hpp"

namespace slabprox {

using json = nlohmann::json;

namespace detail {

inline bool parse_double(const std::string& s, double* out) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  const char* ee = e;
  while (ee > b && (ee[-1] == ' ' || ee[-1] == '\t' || ee[-1] == '\r')) --ee;
  if (b == ee) return false;
  const auto r = std::from_chars(b, ee, *out);
  return r.ec == std::errc() && r.ptr == ee;
}

inline std::vector<std::string> split_fields(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

// Numeric CSV with an optional header row; ragged rows are an error that
// names the offending line.
inline Eigen::MatrixXd load_csv_matrix(const std::string& path, char sep = ',') {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv_matrix: cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  long line_no = 0;
  std::size_t width = 0;
  bool saw_data = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_fields(line, sep);
    std::vector<double> row(fields.size());
    bool numeric = true;
    for (std::size_t i = 0; i < fields.size(); ++i)
      if (!detail::parse_double(fields[i], &row[i])) { numeric = false; break; }
    if (!numeric) {
      if (!saw_data && rows.empty()) continue;  // header row
      throw std::runtime_error("load_csv_matrix: non-numeric field at " + path + ":" +
                               std::to_string(line_no));
    }
    if (width == 0) width = row.size();
    if (row.size() != width)
      throw std::runtime_error("load_csv_matrix: ragged row at " + path + ":" +
                               std::to_string(line_no));
    rows.push_back(std::move(row));
    saw_data = true;
  }
  if (rows.empty()) throw std::runtime_error("load_csv_matrix: no data rows in " + path);
  Eigen::MatrixXd M(rows.size(), width);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < width; ++j) M(i, j) = rows[i][j];
  return M;
}

inline Dataset load_dataset(const std::string& x_path, const std::string& z_path,
                            double sigma2 = 1.0) {
  Dataset data;
  data.X = load_csv_matrix(x_path);
  const Eigen::MatrixXd zm = load_csv_matrix(z_path);
  if (zm.cols() != 1)
    throw std::runtime_error("load_dataset: response file must have one column");
  data.z = zm.col(0);
  data.sigma2 = sigma2;
  validate_dataset(data);
  return data;
}

inline void write_csv_matrix(const std::string& path, const Eigen::MatrixXd& M,
                             const std::string& header = "") {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("write_csv_matrix: cannot open " + tmp);
    out.precision(17);
    if (!header.empty()) out << header << "\n";
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      for (Eigen::Index j = 0; j < M.cols(); ++j) {
        if (j) out << ",";
        out << M(i, j);
      }
      out << "\n";
    }
    if (!out) throw std::runtime_error("write_csv_matrix: write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("write_csv_matrix: rename failed for " + path);
}

inline json trace_record_json(const TraceRecord& r) {
  json j;
  j["iter"] = r.iter;
  j["delta"] = r.delta;
  std::vector<double> th(r.theta.data(), r.theta.data() + r.theta.size());
  j["theta"] = th;
  j["q"] = r.q;
  j["lambda1"] = r.lambda1;
  j["lambda2"] = r.lambda2;
  j["log_target"] = r.log_target;
  auto acc = [](int a) { return a < 0 ? json() : json(a == 1); };
  j["acc_mala"] = acc(r.acc_mala);
  j["acc_ind"] = acc(r.acc_ind);
  j["acc_rwm"] = acc(r.acc_rwm);
  return j;
}

// Streaming JSONL sink for trace records; finalize with close() so the
// output appears atomically under the target name.
class TraceWriter {
 public:
  explicit TraceWriter(std::string path) : path_(std::move(path)), tmp_(path_ + ".tmp") {
    out_.open(tmp_);
    if (!out_) throw std::runtime_error("TraceWriter: cannot open " + tmp_);
  }
  ~TraceWriter() {
    if (out_.is_open()) out_.close();  // leaves .tmp behind when not closed properly
  }
  void write(const TraceRecord& r) {
    out_ << trace_record_json(r).dump() << "\n";
    ++count_;
  }
  long count() const { return count_; }
  void close() {
    if (!out_.is_open()) return;
    out_.flush();
    if (!out_) throw std::runtime_error("TraceWriter: write failed for " + tmp_);
    out_.close();
    if (std::rename(tmp_.c_str(), path_.c_str()) != 0)
      throw std::runtime_error("TraceWriter: rename failed for " + path_);
  }

 private:
  std::string path_, tmp_;
  std::ofstream out_;
  long count_ = 0;
};

inline void write_json(const std::string& path, const json& j) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("write_json: cannot open " + tmp);
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("write_json: write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("write_json: rename failed for " + path);
}

inline json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_json: cannot open " + path);
  json j;
  in >> j;
  return j;
}

inline json summary_json(const ChainSummary& s, bool with_timing = true) {
  json j;
  j["sweeps"] = s.sweeps;
  j["burn_in"] = s.burn_in;
  j["d"] = s.d;
  j["gamma"] = s.gamma;
  j["mala_step_final"] = s.mala_step_final;
  j["rwm_scale_final"] = s.rwm_scale_final;
  j["mala_rate"] = s.mala_rate;
  j["ind_rate"] = s.ind_rate;
  j["rwm_rate"] = s.rwm_rate;
  j["avg_active"] = s.avg_active;
  j["q_mean"] = s.q_mean;
  j["lambda1_mean"] = s.lambda1_mean;
  j["lambda2_mean"] = s.lambda2_mean;
  j["theta_mean"] = std::vector<double>(s.theta_mean.data(), s.theta_mean.data() + s.theta_mean.size());
  j["theta_sq_mean"] =
      std::vector<double>(s.theta_sq_mean.data(), s.theta_sq_mean.data() + s.theta_sq_mean.size());
  j["inclusion"] = std::vector<double>(s.inclusion.data(), s.inclusion.data() + s.inclusion.size());
  if (!s.mask_freq.empty()) j["mask_freq"] = s.mask_freq;
  j["final_delta"] = delta_bitstring(s.final_delta);
  j["final_theta"] =
      std::vector<double>(s.final_theta.data(), s.final_theta.data() + s.final_theta.size());
  j["final_q"] = s.final_phi.q;
  j["final_lambda1"] = s.final_phi.lambda1;
  j["final_lambda2"] = s.final_phi.lambda2;
  j["draws"] = {{"delta", s.draws_delta},
                {"mala", s.draws_mala},
                {"independence", s.draws_ind},
                {"q", s.draws_q},
                {"lambda", s.draws_lambda}};
  if (with_timing) j["wall_seconds"] = s.wall_seconds;
  return j;
}

}  // namespace slabprox
