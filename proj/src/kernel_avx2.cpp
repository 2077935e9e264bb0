// AVX2 + FMA lanes of the transfer-cocycle kernel. Operation order matches
// the scalar reference exactly; every arithmetic step is either the same
// correctly-rounded scalar operation applied per lane or an exact
// power-of-two rescale, so results are bit-identical to the scalar path.

#include "kernel_detail.hpp"

#if defined(QPL_BUILD_AVX2)

#include <immintrin.h>

namespace qpl::detail {

namespace {

inline __m256d abs_pd(__m256d x) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), x);
}

inline __m256d poly_cos2pi_avx2(__m256d y) {
  const __m256d four = _mm256_set1_pd(4.0);
  __m256d t = _mm256_mul_pd(four, y);
  __m256d q = _mm256_round_pd(t, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d z = _mm256_sub_pd(t, q);
  __m256d s = _mm256_mul_pd(z, z);
  __m256d cs = _mm256_set1_pd(kCosCoef[8]);
  for (int k = 7; k >= 0; --k)
    cs = _mm256_fmadd_pd(cs, s, _mm256_set1_pd(kCosCoef[k]));
  __m256d sn = _mm256_set1_pd(kSinCoef[8]);
  for (int k = 7; k >= 0; --k)
    sn = _mm256_fmadd_pd(sn, s, _mm256_set1_pd(kSinCoef[k]));
  sn = _mm256_mul_pd(sn, z);
  // Quadrant q mod 4, computed exactly in doubles.
  __m256d qm = _mm256_sub_pd(
      q, _mm256_mul_pd(four, _mm256_floor_pd(_mm256_mul_pd(q, _mm256_set1_pd(0.25)))));
  __m256d is1 = _mm256_cmp_pd(qm, _mm256_set1_pd(1.0), _CMP_EQ_OQ);
  __m256d is2 = _mm256_cmp_pd(qm, _mm256_set1_pd(2.0), _CMP_EQ_OQ);
  __m256d is3 = _mm256_cmp_pd(qm, _mm256_set1_pd(3.0), _CMP_EQ_OQ);
  __m256d use_sin = _mm256_or_pd(is1, is3);
  __m256d negate = _mm256_or_pd(is1, is2);
  __m256d val = _mm256_blendv_pd(cs, sn, use_sin);
  return _mm256_xor_pd(val, _mm256_and_pd(negate, _mm256_set1_pd(-0.0)));
}

inline __m256d eval_potential_avx2(const PotentialData& p, __m256d y) {
  __m256d c1 = poly_cos2pi_avx2(y);
  __m256d acc = _mm256_fmadd_pd(_mm256_set1_pd(p.coeffs[0]), c1,
                                _mm256_set1_pd(p.mean));
  __m256d cjm2 = _mm256_set1_pd(1.0), cjm1 = c1;
  __m256d t2 = _mm256_add_pd(c1, c1);
  for (std::size_t j = 1; j < p.ncoeff; ++j) {
    __m256d cj = _mm256_fmsub_pd(t2, cjm1, cjm2);
    acc = _mm256_fmadd_pd(_mm256_set1_pd(p.coeffs[j]), cj, acc);
    cjm2 = cjm1;
    cjm1 = cj;
  }
  return acc;
}

} // namespace

void cocycle_batch_avx2(const PotentialData& pot, const CocycleRequest& req,
                        const CocycleLane* lanes, std::size_t nlanes,
                        std::vector<std::vector<ScaledMatrix>>& out,
                        std::size_t out_offset) {
  const bool forward = req.direction == OrbitDirection::Forward;
  const __m256d valpha = _mm256_set1_pd(req.alpha);
  const __m256d vlambda = _mm256_set1_pd(req.lambda);
  const __m256d one = _mm256_set1_pd(1.0);
  const std::int64_t n_last = req.steps.back();

  for (std::size_t base = 0; base < nlanes; base += 4) {
    const std::size_t valid = (nlanes - base < 4) ? nlanes - base : 4;
    alignas(32) double ph[4], en[4];
    for (std::size_t j = 0; j < 4; ++j) {
      const CocycleLane& l = lanes[base + (j < valid ? j : 0)];
      ph[j] = wrap_unit(l.phase);
      en[j] = l.energy;
    }
    __m256d y = _mm256_load_pd(ph);
    __m256d energy = _mm256_load_pd(en);
    __m256d a = one, b = _mm256_setzero_pd();
    __m256d c = _mm256_setzero_pd(), d = one;
    __m256i k2 = _mm256_setzero_si256();

    auto renorm = [&]() {
      __m256d m = _mm256_max_pd(_mm256_max_pd(abs_pd(a), abs_pd(b)),
                                _mm256_max_pd(abs_pd(c), abs_pd(d)));
      // Unbiased exponent of each (normal, positive) lane maximum.
      __m256i e = _mm256_sub_epi64(
          _mm256_and_si256(_mm256_srli_epi64(_mm256_castpd_si256(m), 52),
                           _mm256_set1_epi64x(0x7FF)),
          _mm256_set1_epi64x(1023));
      k2 = _mm256_add_epi64(k2, e);
      __m256i sbits = _mm256_slli_epi64(
          _mm256_sub_epi64(_mm256_set1_epi64x(1023), e), 52);
      __m256d scale = _mm256_castsi256_pd(sbits); // exact 2^-e per lane
      a = _mm256_mul_pd(a, scale);
      b = _mm256_mul_pd(b, scale);
      c = _mm256_mul_pd(c, scale);
      d = _mm256_mul_pd(d, scale);
    };

    std::size_t next_snap = 0;
    for (std::int64_t n = 1; n <= n_last; ++n) {
      if (forward) {
        __m256d w = _mm256_fnmadd_pd(vlambda, eval_potential_avx2(pot, y), energy);
        __m256d na = _mm256_fmsub_pd(w, a, c);
        __m256d nb = _mm256_fmsub_pd(w, b, d);
        c = a;
        d = b;
        a = na;
        b = nb;
        y = _mm256_add_pd(y, valpha);
        __m256d ge = _mm256_cmp_pd(y, one, _CMP_GE_OQ);
        y = _mm256_sub_pd(y, _mm256_and_pd(ge, one));
      } else {
        y = _mm256_sub_pd(y, valpha);
        __m256d lt = _mm256_cmp_pd(y, _mm256_setzero_pd(), _CMP_LT_OQ);
        y = _mm256_add_pd(y, _mm256_and_pd(lt, one));
        __m256d w = _mm256_fnmadd_pd(vlambda, eval_potential_avx2(pot, y), energy);
        __m256d nc = _mm256_fmsub_pd(w, c, a);
        __m256d nd = _mm256_fmsub_pd(w, d, b);
        a = c;
        b = d;
        c = nc;
        d = nd;
      }
      if ((n & 15) == 0) renorm();
      if (n == req.steps[next_snap]) {
        renorm();
        alignas(32) double sa[4], sb[4], sc[4], sd[4];
        alignas(32) std::int64_t sk[4];
        _mm256_store_pd(sa, a);
        _mm256_store_pd(sb, b);
        _mm256_store_pd(sc, c);
        _mm256_store_pd(sd, d);
        _mm256_store_si256(reinterpret_cast<__m256i*>(sk), k2);
        for (std::size_t j = 0; j < valid; ++j)
          out[out_offset + base + j][next_snap] =
              ScaledMatrix{{sa[j], sb[j], sc[j], sd[j]}, sk[j]};
        if (++next_snap == req.steps.size()) break;
      }
    }
  }
}

} // namespace qpl::detail

#endif // QPL_BUILD_AVX2
