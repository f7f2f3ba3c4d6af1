#include "lexpred/vocab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "lexpred/errors.hpp"

namespace lexpred::vocab {

Vocabulary::Vocabulary(std::vector<std::pair<std::string, long long>> ranked_kept,
                       double cutoff_percent, size_t total_distinct)
    : kept_(std::move(ranked_kept)), cutoff_percent_(cutoff_percent), total_distinct_(total_distinct) {
    for (size_t i = 0; i < kept_.size(); ++i) {
        index_[kept_[i].first] = i + 1;
    }
}

size_t Vocabulary::index_of(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? 0 : it->second;
}

const std::string& Vocabulary::token_at(size_t index) const {
    static const std::string unk(textnorm::kUnk);
    if (index == 0) return unk;
    if (index > kept_.size()) throw ValidationError("vocabulary index out of range");
    return kept_[index - 1].first;
}

std::vector<size_t> Vocabulary::encode(const std::vector<std::string>& tokens) const {
    std::vector<size_t> out(tokens.size());
    for (size_t i = 0; i < tokens.size(); ++i) out[i] = index_of(tokens[i]);
    return out;
}

std::vector<std::string> Vocabulary::decode(const std::vector<size_t>& indices) const {
    std::vector<std::string> out(indices.size());
    for (size_t i = 0; i < indices.size(); ++i) out[i] = token_at(indices[i]);
    return out;
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write vocabulary file: " + path);
    out << "cutoff_percent=" << cutoff_percent_ << " total_distinct=" << total_distinct_ << "\n";
    for (size_t i = 0; i < kept_.size(); ++i) {
        out << (i + 1) << "\t" << kept_[i].first << "\t" << kept_[i].second << "\n";
    }
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open vocabulary file: " + path);
    std::string header;
    if (!std::getline(in, header)) throw ValidationError("empty vocabulary file: " + path);
    double cutoff = 0.0;
    size_t total = 0;
    {
        std::istringstream hs(header);
        std::string a, b;
        hs >> a >> b;
        if (a.rfind("cutoff_percent=", 0) != 0 || b.rfind("total_distinct=", 0) != 0) {
            throw ValidationError("bad vocabulary header: " + header);
        }
        cutoff = std::atof(a.c_str() + 15);
        total = static_cast<size_t>(std::atoll(b.c_str() + 15));
    }
    std::vector<std::pair<std::string, long long>> kept;
    std::string line;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        size_t rank;
        std::string token;
        long long freq;
        if (!(ls >> rank >> token >> freq) || rank != kept.size() + 1) {
            throw ParseError("bad vocabulary row", lineno, 1);
        }
        kept.emplace_back(token, freq);
    }
    return Vocabulary(std::move(kept), cutoff, total);
}

Vocabulary build_vocabulary(const std::vector<textnorm::TokenizedDocument>& docs,
                            double cutoff_percent) {
    if (!(cutoff_percent > 0.0 && cutoff_percent <= 100.0)) {
        throw ValidationError("cutoff_percent must lie in (0,100], got " +
                              std::to_string(cutoff_percent));
    }
    if (docs.empty()) throw ValidationError("cannot build a vocabulary from an empty corpus");

    std::map<std::string, long long> counts;
    for (const auto& doc : docs) {
        for (const auto& token : doc.tokens) {
            if (token == textnorm::kUnk) continue;  // reserved
            ++counts[token];
        }
    }
    if (counts.empty()) throw ValidationError("corpus has no tokens besides UNK");

    std::vector<std::pair<std::string, long long>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    const size_t total_distinct = ranked.size();
    size_t keep = static_cast<size_t>(
        std::ceil(cutoff_percent * static_cast<double>(total_distinct) / 100.0));
    keep = std::clamp<size_t>(keep, 1, total_distinct);
    ranked.resize(keep);
    return Vocabulary(std::move(ranked), cutoff_percent, total_distinct);
}

}  // namespace lexpred::vocab
