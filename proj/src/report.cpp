#include <cstdio>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "bloomqa/evalharness.hpp"

namespace bloomqa {

using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

const AggregateRow& EvalReport::row(const Restriction& r) const {
  for (const auto& a : aggregate) {
    if (a.restriction == r) return a;
  }
  throw std::out_of_range("report has no row for restriction " + r.key());
}

json EvalReport::to_json() const {
  json j;
  j["dataset"] = to_string(dataset);
  j["dataset_level"] = dataset_level(dataset).value();
  try {
    j["proximal_level"] = proximal_level(dataset).value();
  } catch (const std::exception&) {
    j["proximal_level"] = nullptr;
  }
  j["total_instances"] = total_instances;
  j["evaluated_instances"] = evaluated_instances;
  j["config"] = config;

  j["seeds"] = json::array();
  for (const auto& s : seeds) {
    j["seeds"].push_back(
        {{"seed", s.seed}, {"valid_count", s.valid_count}, {"name_not_found_skips", s.name_not_found_skips}});
  }
  j["seed_rows"] = json::array();
  for (const auto& r : seed_rows) {
    j["seed_rows"].push_back({{"restriction", r.restriction.key()},
                              {"label", r.restriction.label(dataset)},
                              {"seed", r.seed},
                              {"correct", r.correct},
                              {"valid_count", r.valid_count},
                              {"accuracy", optional_number(r.accuracy)}});
  }
  j["aggregate_rows"] = json::array();
  for (const auto& a : aggregate) {
    j["aggregate_rows"].push_back({{"restriction", a.restriction.key()},
                                   {"label", a.label},
                                   {"proximal", a.proximal},
                                   {"mean_accuracy", optional_number(a.mean_accuracy)},
                                   {"std_accuracy", a.mean_accuracy ? json(a.std_accuracy) : json(nullptr)},
                                   {"mean_valid", a.mean_valid},
                                   {"std_valid", a.std_valid},
                                   {"defined_seeds", a.defined_seeds}});
  }
  return j;
}

std::string EvalReport::to_json_text() const { return to_json().dump(2) + "\n"; }

std::string EvalReport::to_table() const {
  std::ostringstream out;
  out << display_name(dataset) << " (" << total_instances << " total";
  if (evaluated_instances != total_instances) out << ", " << evaluated_instances << " evaluated";
  out << ") (" << dataset_level(dataset).value() << ": " << dataset_level(dataset).name() << ")\n";

  std::vector<double> valid;
  for (const auto& s : seeds) valid.push_back(static_cast<double>(s.valid_count));
  auto [vm, vs] = mean_std(valid);
  out << "seeds:";
  for (const auto& s : seeds) out << ' ' << s.seed;
  out << "   valid: " << fixed(vm, 0) << " ± " << fixed(vs, 0) << '\n';

  std::size_t width = 5;
  for (const auto& a : aggregate) width = std::max(width, a.label.size() + 1);
  out << std::left << std::setw(static_cast<int>(width) + 2) << "Level" << "Accuracy\n";
  for (const auto& a : aggregate) {
    auto label = a.label + (a.proximal ? "*" : "");
    out << std::left << std::setw(static_cast<int>(width) + 2) << label;
    if (a.mean_accuracy) {
      out << fixed(*a.mean_accuracy * 100.0, 2) << " ± " << fixed(a.std_accuracy * 100.0, 2);
    } else {
      out << "n/a";
    }
    out << '\n';
  }
  out << "* = level of proximal context\n";
  return out.str();
}

}  // namespace bloomqa
