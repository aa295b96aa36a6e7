#include "cortex/metrics/artifacts.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cortex/error.hpp"

namespace cortex::metrics {
namespace {

namespace fs = std::filesystem;

std::string g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

// Whole-file write via temp + rename; no partial files on failure.
void write_file(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("write failed for " + path.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot finalize " + path.string());
  }
}

struct Series {
  std::string name;
  std::vector<double> xs, ys;
};

// Minimal line chart with the data points embedded as circles.
std::string line_chart_svg(const std::string& title, const std::string& y_label,
                           const Series& s) {
  const int w = 640, h = 420, ml = 64, mr = 16, mt = 40, mb = 44;
  double xmin = s.xs.front(), xmax = s.xs.back();
  double ymin = *std::min_element(s.ys.begin(), s.ys.end());
  double ymax = *std::max_element(s.ys.begin(), s.ys.end());
  if (xmax - xmin < 1e-12) xmax = xmin + 1.0;
  if (ymax - ymin < 1e-12) {
    ymax += 0.5;
    ymin -= 0.5;
  } else {
    const double pad = 0.05 * (ymax - ymin);
    ymax += pad;
    ymin -= pad;
  }
  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr); };
  auto py = [&](double y) { return h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << w / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"16\">" << title << "</text>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\""
     << h - mb << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb
     << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double yv = ymin + (ymax - ymin) * i / 4.0;
    os << "<text x=\"" << ml - 6 << "\" y=\"" << py(yv) + 4
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << g9(yv)
       << "</text>\n";
    os << "<line x1=\"" << ml - 3 << "\" y1=\"" << py(yv) << "\" x2=\"" << ml << "\" y2=\""
       << py(yv) << "\" stroke=\"black\"/>\n";
  }
  const int xticks = std::min<int>(8, static_cast<int>(s.xs.size()));
  for (int i = 0; i < xticks; ++i) {
    const double xv = xmin + (xmax - xmin) * i / std::max(1, xticks - 1);
    os << "<text x=\"" << px(xv) << "\" y=\"" << h - mb + 16
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
       << static_cast<long long>(std::llround(xv)) << "</text>\n";
  }
  os << "<text x=\"" << w / 2 << "\" y=\"" << h - 8
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">epoch</text>\n";
  os << "<text x=\"16\" y=\"" << (mt + h - mb) / 2
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 "
     << (mt + h - mb) / 2 << ")\">" << y_label << "</text>\n";
  os << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < s.xs.size(); ++i)
    os << px(s.xs[i]) << "," << py(s.ys[i]) << " ";
  os << "\"/>\n";
  for (std::size_t i = 0; i < s.xs.size(); ++i)
    os << "<circle cx=\"" << px(s.xs[i]) << "\" cy=\"" << py(s.ys[i])
       << "\" r=\"2.5\" fill=\"#1f77b4\"><title>" << g9(s.xs[i]) << "," << g9(s.ys[i])
       << "</title></circle>\n";
  os << "</svg>\n";
  return os.str();
}

std::string confusion_svg(const ConfusionMatrix& m, const data::LabelMap& labels) {
  const int cell = 86, ml = 110, mt = 84;
  const int w = ml + cell * data::kNumClasses + 20;
  const int h = mt + cell * data::kNumClasses + 20;
  std::int64_t mx = 1;
  for (const auto& row : m.counts)
    for (auto v : row) mx = std::max(mx, v);

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << (ml + cell * 2) << "\" y=\"22\" text-anchor=\"middle\" "
        "font-family=\"sans-serif\" font-size=\"15\">confusion matrix (rows: true, columns: "
        "predicted)</text>\n";
  for (int c = 0; c < data::kNumClasses; ++c) {
    os << "<text x=\"" << ml + c * cell + cell / 2 << "\" y=\"" << mt - 10
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
       << labels.name_of(c) << "</text>\n";
    os << "<text x=\"" << ml - 8 << "\" y=\"" << mt + c * cell + cell / 2 + 4
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
       << labels.name_of(c) << "</text>\n";
  }
  for (int r = 0; r < data::kNumClasses; ++r) {
    for (int c = 0; c < data::kNumClasses; ++c) {
      const std::int64_t v = m.counts[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      const double t = static_cast<double>(v) / static_cast<double>(mx);
      const int blue = 255 - static_cast<int>(t * 175.0);
      const int other = 255 - static_cast<int>(t * 225.0);
      os << "<rect x=\"" << ml + c * cell << "\" y=\"" << mt + r * cell << "\" width=\"" << cell
         << "\" height=\"" << cell << "\" fill=\"rgb(" << other << "," << other << "," << blue
         << ")\" stroke=\"#888\"/>\n";
      os << "<text x=\"" << ml + c * cell + cell / 2 << "\" y=\"" << mt + r * cell + cell / 2 + 5
         << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" fill=\""
         << (t > 0.55 ? "white" : "black") << "\">" << v << "</text>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace

void CurveLog::on_epoch(const train::EpochRecord& rec) {
  if (!records_.empty() && rec.epoch <= records_.back().epoch)
    throw ValidationError("curve log epochs must be strictly increasing");
  records_.push_back(rec);
}

bool CurveLog::has_eval_columns() const {
  for (const auto& r : records_)
    if (r.eval_accuracy || r.eval_macro_precision) return true;
  return false;
}

std::vector<train::EpochRecord> parse_curves_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty curves file: " + path);
  const bool has_eval = line.find("eval_accuracy") != std::string::npos;
  std::vector<train::EpochRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    train::EpochRecord rec;
    std::getline(ls, cell, ',');
    rec.epoch = std::stoi(cell);
    std::getline(ls, cell, ',');
    rec.train_loss = std::stof(cell);
    std::getline(ls, cell, ',');
    rec.train_accuracy = std::stof(cell);
    if (has_eval) {
      if (std::getline(ls, cell, ',') && !cell.empty()) rec.eval_accuracy = std::stof(cell);
      if (std::getline(ls, cell, ',') && !cell.empty())
        rec.eval_macro_precision = std::stof(cell);
    }
    out.push_back(rec);
  }
  return out;
}

void emit_artifacts(const CurveLog& curves, const EvalReport* report,
                    const std::string& out_dir, const data::LabelMap& labels) {
  fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw IoError("metrics directory is not writable: " + out_dir);

  const auto& recs = curves.records();
  const bool eval_cols = curves.has_eval_columns();

  // curves.csv
  {
    std::ostringstream os;
    os << "epoch,train_loss,train_accuracy";
    if (eval_cols) os << ",eval_accuracy,eval_macro_precision";
    os << "\n";
    for (const auto& r : recs) {
      os << r.epoch << "," << g9(r.train_loss) << "," << g9(r.train_accuracy);
      if (eval_cols) {
        os << ",";
        if (r.eval_accuracy) os << g9(*r.eval_accuracy);
        os << ",";
        if (r.eval_macro_precision) os << g9(*r.eval_macro_precision);
      }
      os << "\n";
    }
    write_file(dir / "curves.csv", os.str());
  }

  if (report) {
    std::ostringstream os;
    os << "";
    for (int c = 0; c < data::kNumClasses; ++c) os << "," << labels.name_of(c);
    os << "\n";
    for (int r = 0; r < data::kNumClasses; ++r) {
      os << labels.name_of(r);
      for (int c = 0; c < data::kNumClasses; ++c)
        os << ","
           << report->confusion.counts[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      os << "\n";
    }
    write_file(dir / "confusion.csv", os.str());
    write_file(dir / "confusion.svg", confusion_svg(report->confusion, labels));
  }

  // Plots only when there is curve data.
  if (!recs.empty()) {
    Series loss{"train_loss", {}, {}};
    Series acc{"train_accuracy", {}, {}};
    for (const auto& r : recs) {
      loss.xs.push_back(r.epoch);
      loss.ys.push_back(r.train_loss);
      acc.xs.push_back(r.epoch);
      acc.ys.push_back(r.train_accuracy);
    }
    write_file(dir / "loss.svg", line_chart_svg("loss of the model", "train loss", loss));
    write_file(dir / "accuracy.svg",
               line_chart_svg("accuracy of the model", "train accuracy", acc));
  }

  // report.txt
  {
    std::ostringstream os;
    os << "evaluation report\n=================\n\n";
    if (recs.empty()) {
      os << "training curves: none recorded; curve plots omitted\n\n";
    } else {
      os << "training curves: " << recs.size() << " epochs, final train_loss "
         << g9(recs.back().train_loss) << ", final train_accuracy "
         << g9(recs.back().train_accuracy) << "\n\n";
    }
    if (report) {
      os << "examples evaluated: " << report->confusion.total() << "\n";
      os << "accuracy:          " << g9(report->accuracy) << "\n";
      os << "macro precision:   " << g9(report->macro_precision)
         << "   (headline figure; mean of defined per-class precisions)\n";
      os << "micro precision:   " << g9(report->micro_precision)
         << "   (equals accuracy for single-label classification)\n\n";
      os << "per-class statistics:\n";
      for (int c = 0; c < data::kNumClasses; ++c) {
        const auto& p = report->per_class_precision[static_cast<std::size_t>(c)];
        const auto& r = report->per_class_recall[static_cast<std::size_t>(c)];
        os << "  " << labels.name_of(c) << ": precision ";
        if (p) os << g9(*p);
        else os << "undefined (never predicted; excluded from macro mean)";
        os << ", recall ";
        if (r) os << g9(*r);
        else os << "undefined (no true examples)";
        os << "\n";
      }
      os << "\nconfusion matrix (rows true, columns predicted):\n";
      os << "            ";
      for (int c = 0; c < data::kNumClasses; ++c) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%11s", labels.name_of(c).c_str());
        os << buf;
      }
      os << "\n";
      for (int r = 0; r < data::kNumClasses; ++r) {
        char head[16];
        std::snprintf(head, sizeof(head), "%-12s", labels.name_of(r).c_str());
        os << head;
        for (int c = 0; c < data::kNumClasses; ++c) {
          char buf[16];
          std::snprintf(buf, sizeof(buf), "%11lld",
                        static_cast<long long>(
                            report->confusion.counts[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]));
          os << buf;
        }
        os << "\n";
      }
    } else {
      os << "no evaluation performed\n";
    }
    write_file(dir / "report.txt", os.str());
  }
}

}  // namespace cortex::metrics
