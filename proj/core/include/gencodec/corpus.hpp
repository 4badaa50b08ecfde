#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gencodec/tensor.hpp"

namespace gencodec {

enum class CorpusStyle {
    Shapes,   // solid/gradient backgrounds with soft-edged circles and boxes
    Patterns, // rings, checkers and diagonal bands (the swap-prior corpus)
};

struct CorpusConfig {
    std::uint64_t seed = 7;
    int size = 600;       // total images; the first test_count are held out
    int test_count = 32;
    int image = 64;
    CorpusStyle style = CorpusStyle::Shapes;
    std::string image_dir; // optional: ingest .ppm files instead of synthesis
};

// Deterministic synthetic corpus. Regeneration from (seed, index) is
// byte-identical; train and test indices never overlap.
class ToyCorpus {
public:
    explicit ToyCorpus(CorpusConfig cfg);

    int train_count() const;
    int test_count() const { return cfg_.test_count; }
    int image_size() const { return cfg_.image; }

    Tensor train_image(int i) const;
    Tensor test_image(int i) const;

    static Tensor synth_image(std::uint64_t seed, int index, int size, CorpusStyle style);

private:
    Tensor image_at(int global_index) const;

    CorpusConfig cfg_;
    std::vector<std::string> files_; // sorted, when image_dir is used
};

// Binary 8-bit PPM (P6). Values map linearly between [0,1] and [0,255].
Tensor read_ppm(const std::string& path);
void write_ppm(const std::string& path, const Tensor& image);

} // namespace gencodec
