#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <string>

#include "gdcnet/errors.hpp"

namespace gdcnet {

// Probabilities ordered (negative, neutral, positive).
struct SentimentDistribution {
    std::array<double, 3> probs{0.0, 1.0, 0.0};
};

// word -> +1 (positive) or -1 (negative)
class SentimentLexicon {
public:
    SentimentLexicon() = default;

    static SentimentLexicon load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open lexicon file: " + path);
        SentimentLexicon lex;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty() || line[0] == '#') continue;
            const auto tab = line.find('\t');
            if (tab == std::string::npos) {
                throw ParseError("lexicon line " + std::to_string(line_no) + ": expected word<TAB>polarity");
            }
            const std::string word = line.substr(0, tab);
            const std::string pol = line.substr(tab + 1);
            int p = 0;
            if (pol == "+1" || pol == "1") p = 1;
            else if (pol == "-1") p = -1;
            else throw ParseError("lexicon line " + std::to_string(line_no) + ": polarity must be +1 or -1");
            lex.polarity_[word] = p;
        }
        return lex;
    }

    void add(const std::string& word, int polarity) { polarity_[word] = polarity; }

    int lookup(const std::string& word) const {
        auto it = polarity_.find(word);
        return it == polarity_.end() ? 0 : it->second;
    }

    std::size_t size() const { return polarity_.size(); }

private:
    std::map<std::string, int> polarity_;
};

// Count lexicon hits over lowercased alphanumeric tokens, smooth with a
// constant neutral mass: probs = (n, 1, p) / (n + 1 + p).
inline SentimentDistribution sentiment_score_lexicon(const std::string& text,
                                                     const SentimentLexicon& lexicon) {
    double pos = 0.0, neg = 0.0;
    std::string token;
    auto flush = [&] {
        if (token.empty()) return;
        const int p = lexicon.lookup(token);
        if (p > 0) pos += 1.0;
        else if (p < 0) neg += 1.0;
        token.clear();
    };
    for (unsigned char c : text) {
        if (std::isalnum(c)) token.push_back(static_cast<char>(std::tolower(c)));
        else flush();
    }
    flush();
    const double z = neg + 1.0 + pos;
    SentimentDistribution d;
    d.probs = {neg / z, 1.0 / z, pos / z};
    return d;
}

// L1 distance between two sentiment distributions; range [0, 2].
inline double sentiment_discrepancy(const SentimentDistribution& p,
                                    const SentimentDistribution& q) {
    double acc = 0.0;
    for (std::size_t k = 0; k < 3; ++k) acc += std::abs(p.probs[k] - q.probs[k]);
    return acc;
}

}  // namespace gdcnet
