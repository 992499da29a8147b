// Copyright 2026 The hippo-apa Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "hippo/harness.hpp"

namespace hippo::harness {

namespace {

using nlohmann::json;

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string fmt(const std::optional<double>& v, int prec = 4) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", prec, *v);
  return buf;
}

}  // namespace

std::optional<double> pcc(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pcc: series differ in length");
  if (x.size() < 2) throw std::invalid_argument("pcc: need at least 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double mse(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty())
    throw std::invalid_argument("mse: series must be nonempty and of equal length");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return s / static_cast<double>(x.size());
}

syncorpus::UtteranceRecord normalize_scores(const syncorpus::UtteranceRecord& record) {
  auto out = record;
  auto check = [](double v, double hi) {
    if (!(v >= 0.0 && v <= hi))
      throw std::invalid_argument("normalize_scores: score " + std::to_string(v) +
                                  " outside [0, " + std::to_string(hi) + "]");
  };
  for (auto* view : {&out.ref, &out.hyp}) {
    for (double v : view->scores.phone) check(v, 2.0);
    for (auto& w : view->scores.word)
      for (auto& v : w) {
        check(v, 10.0);
        v /= kScoreScale;
      }
    for (auto& v : view->scores.utterance) {
      check(v, 10.0);
      v /= kScoreScale;
    }
  }
  return out;
}

double denormalize(double value, bool phone_level) {
  return phone_level ? value : value * kScoreScale;
}

const AspectMetric& MetricReport::at(const std::string& name) const {
  for (const auto& a : aspects)
    if (a.name == name) return a;
  throw std::out_of_range("no aspect " + name);
}

PlainPredictions predict(const model::HippoModel& m, const model::ModelInputs& in) {
  const auto p = m.forward(in);
  PlainPredictions out;
  const auto row = [](const Tensor& t, std::size_t n) {
    return std::vector<double>(t.data().begin(), t.data().begin() + static_cast<std::ptrdiff_t>(n));
  };
  out.phone = row(p.phone, p.num_phones);
  for (std::size_t a = 0; a < model::kWordAspects; ++a) out.word[a] = row(p.word[a], p.num_words);
  for (std::size_t a = 0; a < model::kUttAspects; ++a) out.utterance[a] = p.utterance[a].item();
  out.z = row(p.z, p.z.size());
  return out;
}

MetricReport score_predictions(std::span<const curriculum::Sample> samples,
                               std::span<const PlainPredictions> preds, const std::string& view) {
  if (samples.size() != preds.size())
    throw std::invalid_argument("score_predictions: samples and predictions differ in count");
  std::array<std::vector<double>, objectives::kAspects> pv, tv;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& t = samples[i].targets;
    const auto& p = preds[i];
    if (p.phone.size() != t.phone.size())
      throw std::invalid_argument("score_predictions: phone count mismatch");
    pv[0].insert(pv[0].end(), p.phone.begin(), p.phone.end());
    tv[0].insert(tv[0].end(), t.phone.begin(), t.phone.end());
    for (std::size_t a = 0; a < model::kWordAspects; ++a) {
      if (p.word[a].size() != t.word[a].size())
        throw std::invalid_argument("score_predictions: word count mismatch");
      pv[1 + a].insert(pv[1 + a].end(), p.word[a].begin(), p.word[a].end());
      tv[1 + a].insert(tv[1 + a].end(), t.word[a].begin(), t.word[a].end());
    }
    for (std::size_t a = 0; a < model::kUttAspects; ++a) {
      pv[1 + model::kWordAspects + a].push_back(p.utterance[a]);
      tv[1 + model::kWordAspects + a].push_back(t.utterance[a]);
    }
  }
  MetricReport r;
  r.view = view;
  r.utterances = samples.size();
  for (std::size_t a = 0; a < objectives::kAspects; ++a) {
    auto& m = r.aspects[a];
    m.name = objectives::aspect_names()[a];
    m.count = pv[a].size();
    if (m.count == 0) continue;
    m.mse = mse(pv[a], tv[a]);
    if (m.count >= 2) m.pcc = pcc(pv[a], tv[a]);
  }
  return r;
}

MetricReport evaluate(const model::HippoModel& m, std::span<const curriculum::Sample> samples,
                      const std::string& view) {
  std::vector<PlainPredictions> preds;
  preds.reserve(samples.size());
  for (const auto& s : samples) preds.push_back(predict(m, s.inputs));
  return score_predictions(samples, preds, view);
}

AggregateReport aggregate(std::span<const MetricReport> trials) {
  if (trials.empty()) throw std::invalid_argument("aggregate: no trials");
  AggregateReport out;
  auto mean_std = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::pair{m, v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size() - 1)) : 0.0};
  };
  for (std::size_t a = 0; a < objectives::kAspects; ++a) {
    std::vector<double> p, e;
    for (const auto& t : trials) {
      if (t.aspects[a].pcc) p.push_back(*t.aspects[a].pcc);
      e.push_back(t.aspects[a].mse);
    }
    auto& m = out[a];
    m.name = trials[0].aspects[a].name;
    m.trials = trials.size();
    std::tie(m.mse_mean, m.mse_std) = mean_std(e);
    if (!p.empty()) {
      const auto [pm, ps] = mean_std(p);
      m.pcc_mean = pm;
      m.pcc_std = ps;
    }
  }
  return out;
}

std::string to_json(const MetricReport& r) {
  json aspects = json::object();
  for (const auto& a : r.aspects)
    aspects[a.name] = {{"pcc", optional_json(a.pcc)}, {"mse", a.mse}, {"count", a.count}};
  return json{{"view", r.view}, {"utterances", r.utterances}, {"aspects", aspects}}.dump();
}

std::string to_json(const AggregateReport& r) {
  json aspects = json::object();
  for (const auto& a : r)
    aspects[a.name] = {{"pcc_mean", optional_json(a.pcc_mean)},
                       {"pcc_std", optional_json(a.pcc_std)},
                       {"mse_mean", a.mse_mean},
                       {"mse_std", a.mse_std},
                       {"trials", a.trials}};
  return json{{"aspects", aspects}}.dump();
}

std::string to_text(const MetricReport& r) {
  std::ostringstream os;
  char line[128];
  std::snprintf(line, sizeof line, "view %s, %zu utterances\n", r.view.c_str(), r.utterances);
  os << line;
  std::snprintf(line, sizeof line, "%-20s %8s %8s %8s\n", "aspect", "pcc", "mse", "count");
  os << line;
  for (const auto& a : r.aspects) {
    std::snprintf(line, sizeof line, "%-20s %8s %8s %8zu\n", a.name.c_str(), fmt(a.pcc).c_str(),
                  fmt(a.mse).c_str(), a.count);
    os << line;
  }
  return os.str();
}

std::string to_text(const AggregateReport& r) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-20s %16s %16s %6s\n", "aspect", "pcc", "mse", "trials");
  os << line;
  for (const auto& a : r) {
    const std::string p = a.pcc_mean ? fmt(a.pcc_mean) + " +- " + fmt(a.pcc_std) : "n/a";
    const std::string e = fmt(a.mse_mean) + " +- " + fmt(a.mse_std);
    std::snprintf(line, sizeof line, "%-20s %16s %16s %6zu\n", a.name.c_str(), p.c_str(),
                  e.c_str(), a.trials);
    os << line;
  }
  return os.str();
}

void write_embeddings_csv(const model::HippoModel& m, std::span<const curriculum::Sample> samples,
                          const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write embeddings " + path);
  os << "utt_id,y";
  for (std::size_t i = 0; i < m.config().dim; ++i) os << ",z" << i;
  os << '\n';
  os.precision(17);
  for (const auto& s : samples) {
    const auto p = m.forward(s.inputs);
    os << s.utt_id << ',' << denormalize(s.targets.utterance[0], false);
    for (double v : p.z.data()) os << ',' << v;
    os << '\n';
  }
  if (!os) throw std::runtime_error("failed writing embeddings " + path);
}

}  // namespace hippo::harness
