#ifndef SLP_RNG_HPP
#define SLP_RNG_HPP

#include <cstdint>
#include <random>

namespace slp
{
    // splitmix64: cheap, well-mixed stream derivation so that per-trial
    // generators are independent of trial execution order.
    inline uint64_t splitmix64(uint64_t x)
    {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    inline uint64_t derive_seed(uint64_t master, uint64_t stream)
    {
        return splitmix64(splitmix64(master) ^ splitmix64(stream * 0xD1342543DE82EF95ULL + 1));
    }

    class Rng
    {
    public:
        explicit Rng(uint64_t seed) : gen_(seed) {}

        double uniform(double lo, double hi)
        {
            return std::uniform_real_distribution<double>(lo, hi)(gen_);
        }

        int uniform_int(int lo, int hi) // inclusive bounds
        {
            return std::uniform_int_distribution<int>(lo, hi)(gen_);
        }

        double normal(double mean = 0.0, double stddev = 1.0)
        {
            return std::normal_distribution<double>(mean, stddev)(gen_);
        }

        uint64_t next_u64() { return gen_(); }

        std::mt19937_64 &engine() { return gen_; }

    private:
        std::mt19937_64 gen_;
    };

} // namespace slp

#endif
