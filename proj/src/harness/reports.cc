#include <cmath>
#include <fstream>
#include <map>
#include <string>

#include "uenl/errors.h"
#include "uenl/evaluate.h"
#include "uenl/format.h"

namespace uenl {
namespace {

template <typename Fn>
void WriteFile(const std::filesystem::path& path, Fn write) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write(out);
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace

void WriteMetricsCsv(std::ostream& out, const std::vector<MetricRow>& rows) {
  out << "method,ood_dataset,fpr95,auroc,aupr\n";
  for (const MetricRow& r : rows) {
    out << r.method << ',' << r.ood_dataset << ',' << FormatDouble(r.fpr95) << ','
        << FormatDouble(r.auroc) << ',' << FormatDouble(r.aupr) << '\n';
  }
}

void WriteAccuracyCsv(std::ostream& out, const std::vector<AccuracyRow>& rows) {
  out << "method,error_rate,acc\n";
  for (const AccuracyRow& r : rows) {
    out << r.method << ',' << FormatDouble(r.error_rate) << ',' << FormatDouble(r.acc)
        << '\n';
  }
}

void WriteHistogramCsv(std::ostream& out, const std::vector<HistogramRow>& rows) {
  out << "dataset,method,bin_left,bin_right,count\n";
  for (const HistogramRow& r : rows) {
    out << r.dataset << ',' << r.method << ',' << FormatDouble(r.bin_left) << ','
        << FormatDouble(r.bin_right) << ',' << r.count << '\n';
  }
}

void WriteEpochLogCsv(std::ostream& out, const std::vector<EpochLog>& log) {
  out << "epoch,lr,mean_loss,test_error,validation_auroc\n";
  for (const EpochLog& e : log) {
    out << e.epoch << ',' << FormatDouble(e.lr) << ',' << FormatDouble(e.mean_loss) << ','
        << FormatDouble(e.test_error) << ','
        << (e.validation_auroc ? FormatDouble(*e.validation_auroc) : "") << '\n';
  }
}

void WriteReportDir(const std::filesystem::path& dir, const EvalReport& report) {
  std::filesystem::create_directories(dir);
  WriteFile(dir / "metrics.csv", [&](std::ostream& o) { WriteMetricsCsv(o, report.metrics); });
  WriteFile(dir / "accuracy.csv",
            [&](std::ostream& o) { WriteAccuracyCsv(o, report.accuracy); });
  WriteFile(dir / "histograms.csv",
            [&](std::ostream& o) { WriteHistogramCsv(o, report.histograms); });
  WriteFile(dir / "scores.csv",
            [&](std::ostream& o) { WriteScoresCsv(o, report.scores, report.id_name); });
}

std::vector<ScoreSet> ReadScoresCsv(std::istream& in, const std::string& source,
                                    std::string& id_name) {
  std::string line;
  if (!std::getline(in, line) || (line != "dataset,sample_index,method,score" &&
                                  line != "dataset,sample_index,method,score\r")) {
    throw DataError(source + ":1: expected header dataset,sample_index,method,score");
  }
  id_name.clear();
  std::vector<ScoreSet> sets;
  std::map<std::string, std::size_t> index;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (std::size_t comma; (comma = line.find(',', start)) != std::string::npos;
         start = comma + 1) {
      cells.push_back(line.substr(start, comma - start));
    }
    cells.push_back(line.substr(start));
    const std::string where = source + ":" + std::to_string(line_number);
    if (cells.size() != 4) throw DataError(where + ": expected 4 cells");
    double score = 0.0;
    if (!ParseDouble(cells[3], score) || !std::isfinite(score)) {
      throw DataError(where + ": column 4 is not a finite number: '" + cells[3] + "'");
    }
    const std::string& dataset = cells[0];
    const std::string& method = cells[2];
    if (id_name.empty()) id_name = dataset;
    auto [it, inserted] = index.try_emplace(method, sets.size());
    if (inserted) sets.push_back(ScoreSet{method, {}, {}});
    ScoreSet& set = sets[it->second];
    (dataset == id_name ? set.id_scores : set.ood_scores[dataset]).push_back(score);
  }
  if (sets.empty()) throw DataError(source + ": no score rows");
  return sets;
}

}  // namespace uenl
