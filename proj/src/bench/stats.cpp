#include "srv6kit/bench/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "srv6kit/core/error.hpp"

namespace srv6kit::bench {

namespace {

constexpr double kT975[] = {
    12.706204736432095, 4.302652729696142,  3.182446305284263,  2.7764451051977987, 2.570581835636314,
    2.4469118511449692, 2.3646242515927844, 2.306004135204166,  2.2621571628540993, 2.2281388519649385,
    2.200985160082949,  2.1788128296634177, 2.1603686564610127, 2.1447866879169273, 2.131449545559323,
    2.1199052992210112, 2.1098155778331806, 2.10092204024096,   2.093024054408263,  2.0859634472658364,
    2.079613844727662,  2.0738730679040147, 2.0686576104190406, 2.0638985616280205, 2.059538552753294,
    2.055529438642871,  2.0518305164802833, 2.048407141795244,  2.045229642132703,  2.0422724563012373,
};
constexpr double kZ975 = 1.959963984540054;

}  // namespace

double t975(std::size_t df)
{
    if (df == 0)
        throw Error(Errc::InsufficientSamples, "t quantile needs df >= 1");
    return df <= 30 ? kT975[df - 1] : kZ975;
}

double median(std::vector<double> s)
{
    if (s.empty())
        return 0;
    std::sort(s.begin(), s.end());
    std::size_t h = s.size() / 2;
    return s.size() % 2 ? s[h] : (s[h - 1] + s[h]) / 2;
}

SummaryStats summarize(const std::vector<double>& samples)
{
    if (samples.size() < 2)
        throw Error(Errc::InsufficientSamples, "at least 2 samples are needed, got " + std::to_string(samples.size()));
    SummaryStats st;
    st.n = samples.size();
    double n = static_cast<double>(st.n);
    st.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    double ss = 0;
    for (double x : samples)
        ss += (x - st.mean) * (x - st.mean);
    st.stddev = std::sqrt(ss / (n - 1));
    if (st.mean != 0) {
        st.cv_pct = st.stddev / std::abs(st.mean) * 100;
        st.ci95_pct = t975(st.n - 1) * st.stddev / (std::sqrt(n) * std::abs(st.mean)) * 100;
    }
    st.median = median(samples);
    return st;
}

}  // namespace srv6kit::bench
