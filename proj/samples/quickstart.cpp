// Simulates one dysfluent utterance at each level, recovers the markers with
// the oracle detector, and scores the result.
//
//   quickstart [cmudict.dict]

#include <iostream>
#include <string>

#include "dysflux/dysflux.hpp"

int main(int argc, char** argv) {
  using namespace dysflux;
  try {
    const std::string dict_path = argc > 1 ? argv[1] : std::string(DYSFLUX_DATA_DIR) + "/cmudict.dict";
    const auto dict = PronunciationDict::load_file(dict_path);

    for (auto level : {AnnotationLevel::Word, AnnotationLevel::Phoneme}) {
      SimulationConfig config;
      config.level = level;
      config.seed = 7;
      config.events_per_utterance = {2, 2};
      const auto corpus = simulate_corpus({"Please call Stella, ask her to bring these things."}, config, dict);
      const auto& record = corpus.records.at(0);
      std::cout << to_string(level) << " level\n";
      std::cout << "  reference: " << record.reference_text << "\n";
      std::cout << "  annotated: " << record.annotated_text << "\n";
      std::cout << "  ipa:       " << record.ipa << "\n";
      for (const auto& e : record.events) {
        std::cout << "  event " << to_string(e.kind) << " at unit " << e.anchor;
        if (e.bounds) std::cout << ", " << e.bounds->start << "-" << e.bounds->end << " s";
        std::cout << "\n";
      }

      const auto predictions = run_detect(corpus.records, &dict, DetectorConfig{});
      std::cout << "  detected:  " << predictions.at(0).annotated_text << "\n\n";
      write_reports(std::cout, nullptr, run_evaluate(corpus.records, predictions));
      std::cout << "\n";
    }
  } catch (const Error& ex) {
    std::cerr << "quickstart: " << ex.what() << "\n";
    return 2;
  }
  return 0;
}
