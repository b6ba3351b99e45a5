/*
 * Copyright 2026 The fairscl Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "fairscl/experiment.hpp"
#include "json.hpp"

namespace fairscl {
namespace {

using nlohmann::json;

std::string Hex(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

uint64_t ParseHex(const std::string& s) { return std::stoull(s, nullptr, 16); }

std::string Fixed(double v, int digits) {
  if (!std::isfinite(v)) return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string PValue(double p) {
  if (p < 1e-4) return "<0.0001";
  return Fixed(p, 4);
}

json Finite(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

ErrorKind KindFromName(const std::string& name) {
  for (int k = 0; k <= static_cast<int>(ErrorKind::kIo); ++k) {
    if (ErrorKindName(static_cast<ErrorKind>(k)) == name) {
      return static_cast<ErrorKind>(k);
    }
  }
  throw Error(ErrorKind::kParse, "unknown error kind '" + name + "' in report");
}

// "mauc:A" -> "A mAUC"; others by name.
std::string MetricLabel(const std::string& metric) {
  if (metric == "overall_auc") return "Overall AUC";
  if (metric == "delta_mauc") return "ΔmAUC";
  if (metric.rfind("mauc:", 0) == 0) return metric.substr(5) + " mAUC";
  return metric;
}

std::vector<std::string> MetricOrder(const ExperimentReport& report,
                                     const std::string& attribute) {
  for (const auto& r : report.results) {
    if (r.attribute != attribute || r.estimates.empty()) continue;
    std::vector<std::string> out;
    for (const auto& e : r.estimates) out.push_back(e.metric);
    return out;
  }
  return {};
}

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

std::string Full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string FormatCell(double point, double low, double high) {
  return Fixed(point, 4) + " (" + Fixed(low, 4) + "-" + Fixed(high, 4) + ")";
}

std::string ReportToJson(const ExperimentReport& report) {
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["generated_at"] = report.timestamp;
  j["config"] = json::parse(ExperimentConfigToJson(report.config));

  json prov;
  prov["config_hash"] = Hex(report.config_hash);
  prov["seed"] = report.config.seed;
  prov["train_size"] = report.train_size;
  prov["test_size"] = report.test_size;
  prov["bootstrap_replicates"] = report.config.bootstrap;
  prov["bootstrap_redraws"] = report.redraws;
  prov["metric_versions"] = json{{"auc", "mann-whitney-midrank/1"},
                                 {"marginal_auc", "global-negatives/1"},
                                 {"bootstrap", "percentile-type7/1"},
                                 {"ttest", "paired-two-sided/1"}};
  const TrainConfig& t = report.config.train;
  prov["assumptions"] = json::array(
      {"batch_size " + std::to_string(t.batch_size) + " (not reported by the source method)",
       "baselines train pretrain_epochs + finetune_epochs supervised epochs",
       "TPR/FPR threshold " + Fixed(report.config.threshold, 2),
       "no early stopping; fixed epoch counts"});
  j["provenance"] = prov;

  json results = json::array();
  for (const MethodResult& r : report.results) {
    json per_group = json::object();
    for (const auto& [cat, g] : r.fairness.per_group) {
      per_group[cat] = json{{"mauc", g.mauc}, {"tpr", g.tpr}, {"fpr", g.fpr},
                            {"bs", g.bs},     {"n_pos", g.n_pos}, {"n_total", g.n_total}};
    }
    json estimates = json::array();
    for (const MetricEstimate& e : r.estimates) {
      estimates.push_back(json{{"metric", e.metric},
                               {"point", e.boot.point},
                               {"ci_low", e.boot.ci_low},
                               {"ci_high", e.boot.ci_high},
                               {"B", e.boot.B},
                               {"seed", e.boot.seed},
                               {"redraws", e.boot.redraws},
                               {"encloses_point", e.encloses_point()},
                               {"replicates", e.boot.replicates}});
    }
    results.push_back(json{
        {"method", std::string(MethodName(r.method))},
        {"attribute", r.attribute},
        {"threshold", r.fairness.threshold},
        {"overall_auc", r.fairness.overall_auc},
        {"per_group", per_group},
        {"deltas", json{{"d_mauc", r.fairness.deltas.d_mauc},
                        {"d_tpr", r.fairness.deltas.d_tpr},
                        {"d_fpr", r.fairness.deltas.d_fpr},
                        {"d_bs", r.fairness.deltas.d_bs}}},
        {"estimates", estimates},
        {"anchors_used", r.anchors_used},
        {"anchors_dropped", r.anchors_dropped},
        {"resample_digest", Hex(r.resample_digest)},
        {"train_seed", r.train_seed},
        {"checkpoint", r.checkpoint},
        {"warnings", r.warnings}});
  }
  j["results"] = results;

  json ttests = json::array();
  for (const TTestRow& row : report.ttests) {
    ttests.push_back(json{{"attribute", row.attribute},
                          {"proposed", "proposed"},
                          {"baseline", std::string(MethodName(row.baseline))},
                          {"t", Finite(row.result.t)},
                          {"p", row.result.p},
                          {"df", row.result.df},
                          {"mean_diff", row.result.mean_diff},
                          {"degenerate", row.result.degenerate}});
  }
  j["ttests"] = ttests;

  json changes = json::array();
  for (const ChangeRow& c : report.changes) {
    changes.push_back(json{
        {"attribute", c.attribute},
        {"baseline", std::string(MethodName(c.baseline))},
        {"metric", c.metric},
        {"baseline_value", c.baseline_value},
        {"proposed_value", c.proposed_value},
        {"absolute", c.change.absolute},
        {"relative_pct", c.change.relative_pct ? json(*c.change.relative_pct)
                                               : json(nullptr)}});
  }
  j["changes"] = changes;

  json failures = json::array();
  for (const Failure& f : report.failures) {
    failures.push_back(json{{"method", f.method},
                            {"attribute", f.attribute},
                            {"stage", f.stage},
                            {"kind", std::string(ErrorKindName(f.kind))},
                            {"message", f.message}});
  }
  j["failures"] = failures;
  return j.dump(2) + "\n";
}

ExperimentReport ReportFromJson(std::string_view json_text) {
  ExperimentReport report;
  try {
    const json j = json::parse(json_text);
    if (j.at("schema_version").get<int>() != kReportSchemaVersion) {
      throw Error(ErrorKind::kParse, "unsupported report schema version");
    }
    report.timestamp = j.at("generated_at").get<std::string>();
    report.config = ParseExperimentConfig(j.at("config").dump());
    const json& prov = j.at("provenance");
    report.config_hash = ParseHex(prov.at("config_hash").get<std::string>());
    report.train_size = prov.at("train_size").get<size_t>();
    report.test_size = prov.at("test_size").get<size_t>();
    report.redraws = prov.at("bootstrap_redraws").get<std::map<std::string, size_t>>();

    for (const json& r : j.at("results")) {
      MethodResult m;
      m.method = ParseMethod(r.at("method").get<std::string>());
      m.attribute = r.at("attribute").get<std::string>();
      m.fairness.attribute = m.attribute;
      m.fairness.threshold = r.at("threshold").get<double>();
      m.fairness.overall_auc = r.at("overall_auc").get<double>();
      for (const auto& [cat, g] : r.at("per_group").items()) {
        GroupMetrics gm;
        gm.mauc = g.at("mauc").get<double>();
        gm.tpr = g.at("tpr").get<double>();
        gm.fpr = g.at("fpr").get<double>();
        gm.bs = g.at("bs").get<double>();
        gm.n_pos = g.at("n_pos").get<size_t>();
        gm.n_total = g.at("n_total").get<size_t>();
        m.fairness.per_group.emplace(cat, gm);
      }
      const json& d = r.at("deltas");
      m.fairness.deltas = {d.at("d_mauc").get<double>(), d.at("d_tpr").get<double>(),
                           d.at("d_fpr").get<double>(), d.at("d_bs").get<double>()};
      for (const json& e : r.at("estimates")) {
        MetricEstimate est;
        est.metric = e.at("metric").get<std::string>();
        est.boot.point = e.at("point").get<double>();
        est.boot.ci_low = e.at("ci_low").get<double>();
        est.boot.ci_high = e.at("ci_high").get<double>();
        est.boot.B = e.at("B").get<size_t>();
        est.boot.seed = e.at("seed").get<uint64_t>();
        est.boot.redraws = e.at("redraws").get<size_t>();
        est.boot.replicates = e.at("replicates").get<std::vector<double>>();
        m.estimates.push_back(std::move(est));
      }
      m.anchors_used = r.at("anchors_used").get<size_t>();
      m.anchors_dropped = r.at("anchors_dropped").get<size_t>();
      m.resample_digest = ParseHex(r.at("resample_digest").get<std::string>());
      m.train_seed = r.at("train_seed").get<uint64_t>();
      m.checkpoint = r.at("checkpoint").get<std::string>();
      m.warnings = r.at("warnings").get<std::vector<std::string>>();
      report.results.push_back(std::move(m));
    }
    for (const json& t : j.at("ttests")) {
      TTestRow row;
      row.attribute = t.at("attribute").get<std::string>();
      row.baseline = ParseMethod(t.at("baseline").get<std::string>());
      row.result.p = t.at("p").get<double>();
      row.result.df = t.at("df").get<int>();
      row.result.mean_diff = t.at("mean_diff").get<double>();
      row.result.degenerate = t.at("degenerate").get<bool>();
      row.result.t = t.at("t").is_null()
                         ? std::copysign(std::numeric_limits<double>::infinity(),
                                         row.result.mean_diff)
                         : t.at("t").get<double>();
      report.ttests.push_back(row);
    }
    for (const json& c : j.at("changes")) {
      ChangeRow row;
      row.attribute = c.at("attribute").get<std::string>();
      row.baseline = ParseMethod(c.at("baseline").get<std::string>());
      row.metric = c.at("metric").get<std::string>();
      row.baseline_value = c.at("baseline_value").get<double>();
      row.proposed_value = c.at("proposed_value").get<double>();
      row.change.absolute = c.at("absolute").get<double>();
      if (!c.at("relative_pct").is_null()) {
        row.change.relative_pct = c.at("relative_pct").get<double>();
      }
      report.changes.push_back(row);
    }
    for (const json& f : j.at("failures")) {
      report.failures.push_back(Failure{
          f.at("method").get<std::string>(), f.at("attribute").get<std::string>(),
          f.at("stage").get<std::string>(), KindFromName(f.at("kind").get<std::string>()),
          f.at("message").get<std::string>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("malformed report: ") + e.what());
  }
  return report;
}

std::string RenderMarkdown(const ExperimentReport& report) {
  const ExperimentConfig& c = report.config;
  std::ostringstream md;
  md << "# Fairness evaluation report\n\n";
  md << "Seed " << c.seed << ", " << c.bootstrap
     << " bootstrap replicates, train n = " << report.train_size
     << ", test n = " << report.test_size << ", threshold "
     << Fixed(c.threshold, 2) << ", config hash `" << Hex(report.config_hash)
     << "`.\n\nCells show point (95% CI).\n";

  for (const std::string& attribute : c.attributes) {
    md << "\n## Attribute `" << attribute << "`\n\n";
    std::vector<Method> shown;
    for (Method m : c.methods) {
      if (report.Find(m, attribute)) shown.push_back(m);
    }
    if (shown.empty()) {
      md << "No method produced results for this attribute.\n";
      continue;
    }
    md << "| Metric |";
    for (Method m : shown) md << ' ' << MethodName(m) << " |";
    md << "\n|---|";
    for (size_t k = 0; k < shown.size(); ++k) md << "---|";
    md << '\n';
    for (const std::string& metric : MetricOrder(report, attribute)) {
      md << "| " << MetricLabel(metric) << " |";
      for (Method m : shown) {
        const MetricEstimate& e = report.Find(m, attribute)->Estimate(metric);
        md << ' ' << FormatCell(e.boot.point, e.boot.ci_low, e.boot.ci_high) << " |";
      }
      md << '\n';
    }

    md << "\n### Threshold metrics\n\n| Metric |";
    for (Method m : shown) md << ' ' << MethodName(m) << " |";
    md << "\n|---|";
    for (size_t k = 0; k < shown.size(); ++k) md << "---|";
    md << '\n';
    const FairnessReport& first = report.Find(shown.front(), attribute)->fairness;
    for (const char* what : {"TPR", "FPR", "BS"}) {
      for (const auto& [cat, g] : first.per_group) {
        md << "| " << cat << ' ' << what << " |";
        for (Method m : shown) {
          const GroupMetrics& gm =
              report.Find(m, attribute)->fairness.per_group.at(cat);
          const double v = what[0] == 'T' ? gm.tpr : what[0] == 'F' ? gm.fpr : gm.bs;
          md << ' ' << Fixed(v, 4) << " |";
        }
        md << '\n';
      }
      md << "| Δ" << what << " |";
      for (Method m : shown) {
        const FairnessDeltas& d = report.Find(m, attribute)->fairness.deltas;
        const double v = what[0] == 'T' ? d.d_tpr : what[0] == 'F' ? d.d_fpr : d.d_bs;
        md << ' ' << Fixed(v, 4) << " |";
      }
      md << '\n';
    }
  }

  if (!report.ttests.empty()) {
    md << "\n## Paired t-tests on ΔmAUC replicates\n\n"
       << "| Attribute | Comparison | Mean difference | t | df | p |\n"
       << "|---|---|---|---|---|---|\n";
    for (const TTestRow& t : report.ttests) {
      md << "| " << t.attribute << " | proposed vs " << MethodName(t.baseline)
         << " | " << Fixed(t.result.mean_diff, 4) << " | " << Fixed(t.result.t, 3)
         << " | " << t.result.df << " | " << PValue(t.result.p) << " |\n";
    }
  }

  if (!report.changes.empty()) {
    md << "\n## Relative and absolute change, proposed vs baseline\n\n"
       << "| Attribute | Baseline | Metric | Baseline value | Proposed value | "
          "Relative change (%) | Absolute change |\n"
       << "|---|---|---|---|---|---|---|\n";
    for (const ChangeRow& ch : report.changes) {
      md << "| " << ch.attribute << " | " << MethodName(ch.baseline) << " | "
         << MetricLabel(ch.metric) << " | " << Fixed(ch.baseline_value, 4) << " | "
         << Fixed(ch.proposed_value, 4) << " | "
         << (ch.change.relative_pct ? Fixed(*ch.change.relative_pct, 2) : "undefined")
         << " | " << Fixed(ch.change.absolute, 4) << " |\n";
    }
  }

  if (!report.failures.empty()) {
    md << "\n## Failures\n\n| Method | Attribute | Stage | Kind | Message |\n"
       << "|---|---|---|---|---|\n";
    for (const Failure& f : report.failures) {
      md << "| " << f.method << " | " << f.attribute << " | " << f.stage << " | "
         << ErrorKindName(f.kind) << " | " << f.message << " |\n";
    }
  }
  return md.str();
}

std::string RenderDelimited(const ExperimentReport& report) {
  std::ostringstream out;
  out << "method,attribute,metric,point,ci_low,ci_high,B,seed,redraws\n";
  for (const MethodResult& r : report.results) {
    const std::string prefix = std::string(MethodName(r.method)) + "," +
                               CsvField(r.attribute) + ",";
    for (const MetricEstimate& e : r.estimates) {
      out << prefix << CsvField(e.metric) << ',' << Full(e.boot.point) << ','
          << Full(e.boot.ci_low) << ',' << Full(e.boot.ci_high) << ',' << e.boot.B
          << ',' << e.boot.seed << ',' << e.boot.redraws << '\n';
    }
    for (const auto& [cat, g] : r.fairness.per_group) {
      out << prefix << CsvField("tpr:" + cat) << ',' << Full(g.tpr) << ",,,,,\n";
      out << prefix << CsvField("fpr:" + cat) << ',' << Full(g.fpr) << ",,,,,\n";
      out << prefix << CsvField("bs:" + cat) << ',' << Full(g.bs) << ",,,,,\n";
    }
    out << prefix << "delta_tpr," << Full(r.fairness.deltas.d_tpr) << ",,,,,\n";
    out << prefix << "delta_fpr," << Full(r.fairness.deltas.d_fpr) << ",,,,,\n";
    out << prefix << "delta_bs," << Full(r.fairness.deltas.d_bs) << ",,,,,\n";
  }
  return out.str();
}

std::vector<std::string> WriteReports(const ExperimentReport& report,
                                      const std::filesystem::path& out_dir,
                                      const std::vector<ReportFormat>& formats) {
  std::vector<std::string> files;
  for (ReportFormat f : formats) {
    switch (f) {
      case ReportFormat::kJson:
        WriteTextFile(out_dir / "report.json", ReportToJson(report));
        files.push_back("report.json");
        break;
      case ReportFormat::kMarkdown:
        WriteTextFile(out_dir / "report.md", RenderMarkdown(report));
        files.push_back("report.md");
        break;
      case ReportFormat::kDelimited:
        WriteTextFile(out_dir / "report.csv", RenderDelimited(report));
        files.push_back("report.csv");
        break;
    }
  }
  return files;
}

}  // namespace fairscl
