// Writes pretagged toy-grammar corpora (word_TAG lines) for the pipeline
// walkthrough and the acceptance run.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "kw2sent/toy_grammar.hpp"

int main(int argc, char** argv) {
  CLI::App app{"generate a tagged toy corpus"};
  std::string train_out = "toy_train.txt", test_out = "toy_test.txt";
  std::size_t n_train = 500, n_test = 50;
  std::uint64_t seed = 1234;
  app.add_option("--train-out", train_out, "training corpus path");
  app.add_option("--test-out", test_out, "held-out corpus path");
  app.add_option("--train", n_train, "training sentences");
  app.add_option("--test", n_test, "held-out sentences");
  app.add_option("--seed", seed, "generation seed");
  CLI11_PARSE(app, argc, argv);

  try {
    auto all = kw2sent::ToyGrammar::generate(n_train + n_test, seed);
    std::vector<kw2sent::TaggedSentence> train(all.begin(),
                                               all.begin() + n_train);
    std::vector<kw2sent::TaggedSentence> test(all.begin() + n_train,
                                              all.end());
    kw2sent::ToyGrammar::write_pretagged(train_out, train);
    kw2sent::ToyGrammar::write_pretagged(test_out, test);
    std::cout << "wrote " << n_train << " sentences to " << train_out
              << " and " << n_test << " to " << test_out << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
