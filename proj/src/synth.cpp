#include "relabel/synth.hpp"

#include "relabel/errors.hpp"

namespace relabel::synth {

const std::array<Template, 5>& templates() {
  static const std::array<Template, 5> ts = {{
      {"there is [label].", schema::Certainty::positive},
      {"there is [label] in the brain.", schema::Certainty::positive},
      {"[label] is evident in the brain.", schema::Certainty::positive},
      {"there may be [label].", schema::Certainty::uncertain},
      {"there is no [label].", schema::Certainty::negative},
  }};
  return ts;
}

std::string render(const Template& t, const std::string& variant) {
  const std::string pattern(t.pattern);
  const std::string placeholder = "[label]";
  const auto pos = pattern.find(placeholder);
  if (pos == std::string::npos) throw error("template lacks the [label] placeholder");
  return pattern.substr(0, pos) + variant + pattern.substr(pos + placeholder.size());
}

corpus::Dataset generate_synthetic(const schema::LabelSchema& sch) {
  corpus::Dataset out;
  for (const schema::Label& lab : sch.labels) {
    for (const std::string& variant : schema::expand_variants(lab)) {
      const auto& ts = templates();
      for (std::size_t ti = 0; ti < ts.size(); ++ti) {
        corpus::AnnotatedSentence s;
        s.report_id = "synthetic/" + lab.id + "/" + variant + "/" + std::to_string(ti);
        s.text = render(ts[ti], variant);
        s.annotations[lab.id] = ts[ti].certainty;
        out.push_back(std::move(s));
      }
    }
  }
  return out;
}

}  // namespace relabel::synth
