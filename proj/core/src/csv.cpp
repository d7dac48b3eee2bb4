#include "homcrb/csv.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

namespace homcrb {

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

std::string csv_header_line() {
  return "kind,label,m,trial,status,coset_err2,group_err2,iterations,final_loglik,coset_var,"
         "coset_var_se,group_var,group_var_se,crb_trace,crb_third_order_trace,n_used,n_failed,"
         "value";
}

namespace {

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }
std::string cell(const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); }

}  // namespace

void write_csv(std::ostream& out, const ExperimentReport& report, const ExperimentConfig& config) {
  out << fmt::format("# schema={} experiment={} seed={} config_hash={:016x}\n", kCsvSchemaVersion,
                     to_string(report.kind), config.seed, config.hash());
  out << csv_header_line() << '\n';
  for (const auto& r : report.rows) {
    out << csv_escape(r.kind) << ',' << csv_escape(r.label) << ',' << r.m << ','
        << (r.trial >= 0 ? std::to_string(r.trial) : std::string()) << ',' << csv_escape(r.status)
        << ',' << cell(r.coset_err2) << ',' << cell(r.group_err2) << ',' << cell(r.iterations)
        << ',' << cell(r.final_loglik) << ',' << cell(r.coset_var) << ',' << cell(r.coset_var_se)
        << ',' << cell(r.group_var) << ',' << cell(r.group_var_se) << ',' << cell(r.crb_trace)
        << ',' << cell(r.crb_third_order_trace) << ',' << cell(r.n_used) << ','
        << cell(r.n_failed) << ',' << cell(r.value) << '\n';
  }
}

std::string to_csv(const ExperimentReport& report, const ExperimentConfig& config) {
  std::ostringstream ss;
  write_csv(ss, report, config);
  return ss.str();
}

}  // namespace homcrb
