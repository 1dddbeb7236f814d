#include "dtl/report.hpp"

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>

#include "dtl/error.hpp"

namespace dtl {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string lpad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

ReportFormat parse_report_format(const std::string& name) {
  if (name == "text") return ReportFormat::text;
  if (name == "csv") return ReportFormat::csv;
  throw ConfigError("unknown report format '" + name + "' (expected text or csv)");
}

std::string format_percent(double pct) { return fixed(pct, 2); }

std::string format_baseline(std::span<const BaselineRow> rows, ReportFormat format) {
  std::ostringstream out;
  if (format == ReportFormat::csv) {
    out << "dataset,train_err_pct,test_err_pct,seed,epochs\n";
    for (const auto& r : rows) {
      out << r.dataset << ',' << format_percent(r.train_err_pct) << ',' << format_percent(r.test_err_pct) << ','
          << r.seed << ',' << r.epochs << '\n';
    }
    return out.str();
  }
  out << pad("Dataset", 20) << lpad("Train (%)", 11) << lpad("Test (%)", 11) << '\n';
  for (const auto& r : rows) {
    out << pad(r.dataset, 20) << lpad(format_percent(r.train_err_pct), 11) << lpad(format_percent(r.test_err_pct), 11)
        << '\n';
  }
  return out.str();
}

std::string format_comparison(std::span<const ComparisonRow> rows, ReportFormat format) {
  std::ostringstream out;
  if (format == ReportFormat::csv) {
    out << "primary,target,strategy,train_err_pct,test_err_pct,seed,epochs\n";
    for (const auto& r : rows) {
      out << r.primary << ',' << r.target << ',' << to_string(r.strategy) << ',' << format_percent(r.train_err_pct)
          << ',' << format_percent(r.test_err_pct) << ',' << r.seed << ',' << r.epochs << '\n';
    }
    return out.str();
  }
  out << pad("Primary", 18) << pad("Target", 18) << pad("Strategy", 13) << lpad("Train (%)", 11)
      << lpad("Test (%)", 11) << '\n';
  for (const auto& r : rows) {
    out << pad(r.primary, 18) << pad(r.target, 18) << pad(to_string(r.strategy), 13)
        << lpad(format_percent(r.train_err_pct), 11) << lpad(format_percent(r.test_err_pct), 11) << '\n';
  }
  return out.str();
}

std::vector<ComparisonRow> parse_comparison_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != "primary,target,strategy,train_err_pct,test_err_pct,seed,epochs") {
    throw InvalidArgument("comparison CSV has an unexpected header");
  }
  std::vector<ComparisonRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 7) throw InvalidArgument("comparison CSV row has " + std::to_string(cells.size()) + " cells");
    ComparisonRow r;
    r.primary = cells[0];
    r.target = cells[1];
    if (cells[2] == "standard") {
      r.strategy = Strategy::standard;
    } else if (cells[2] == "distributed") {
      r.strategy = Strategy::distributed;
    } else {
      throw InvalidArgument("unknown strategy '" + cells[2] + "'");
    }
    try {
      r.train_err_pct = std::stod(cells[3]);
      r.test_err_pct = std::stod(cells[4]);
      r.seed = std::stoull(cells[5]);
      r.epochs = std::stoull(cells[6]);
    } catch (const std::exception&) {
      throw InvalidArgument("malformed number in comparison CSV row: " + line);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<BaselineRow> parse_baseline_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != "dataset,train_err_pct,test_err_pct,seed,epochs") {
    throw InvalidArgument("baseline CSV has an unexpected header");
  }
  std::vector<BaselineRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 5) throw InvalidArgument("baseline CSV row has " + std::to_string(cells.size()) + " cells");
    BaselineRow r;
    r.dataset = cells[0];
    try {
      r.train_err_pct = std::stod(cells[1]);
      r.test_err_pct = std::stod(cells[2]);
      r.seed = std::stoull(cells[3]);
      r.epochs = std::stoull(cells[4]);
    } catch (const std::exception&) {
      throw InvalidArgument("malformed number in baseline CSV row: " + line);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string format_bpa_inspect(std::span<const BpaResult> results, std::span<const double> gammas, ReportFormat format) {
  if (results.size() != gammas.size()) throw InvalidArgument("one cost per assignment expected");
  std::ostringstream out;
  if (format == ReportFormat::csv) {
    out << "filter,class,recall_mass,precision_mass,theta,gamma,status\n";
    for (std::size_t k = 0; k < results.size(); ++k) {
      const auto& b = results[k];
      const std::string status = b.degenerate ? "degenerate" : (b.theta.near_total_agreement ? "saturated" : "ok");
      for (std::size_t i = 0; i < b.theta.masses.size(); ++i) {
        const double r = b.degenerate ? 0.0 : b.assignments.recall[i];
        const double s = b.degenerate ? 0.0 : b.assignments.precision[i];
        out << k << ',' << i << ',' << fixed(r, 6) << ',' << fixed(s, 6) << ',' << fixed(b.theta.masses[i], 6) << ','
            << fixed(gammas[k], 6) << ',' << status << '\n';
      }
    }
    return out.str();
  }
  for (std::size_t k = 0; k < results.size(); ++k) {
    const auto& b = results[k];
    const std::size_t c = b.confusion.classes();
    out << "filter " << k << '\n' << "  confusion (rows: actual, columns: predicted)\n";
    for (std::size_t i = 0; i < c; ++i) {
      out << "   ";
      for (std::size_t j = 0; j < c; ++j) out << lpad(std::to_string(b.confusion(i, j)), 7);
      out << '\n';
    }
    const auto row = [&](const char* name, const std::vector<double>& v) {
      out << "  " << pad(name, 6);
      for (double x : v) {
        std::ostringstream cell;
        if (std::abs(x) < 1e5) {
          cell << fixed(x, 4);
        } else {
          cell << std::scientific << std::setprecision(2) << x;
        }
        out << lpad(cell.str(), 9);
      }
      out << '\n';
    };
    if (b.degenerate) {
      out << "  note: degenerate evidence (all-zero diagonal)\n";
    } else {
      row("R", b.assignments.recall);
      row("S", b.assignments.precision);
    }
    row("theta", b.theta.masses);
    if (b.theta.near_total_agreement) out << "  note: near-total agreement, denominator clamped\n";
    out << "  gamma " << fixed(gammas[k], 4) << "\n\n";
  }
  return out.str();
}

}  // namespace dtl
