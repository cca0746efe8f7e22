from .ntt import (
    DomainError,
    NttPoly,
    RingPoly,
    fwd_ntt,
    inv_ntt,
    negacyclic_schoolbook,
    ntt_forward,
    ntt_inverse,
    rearrange,
)
from .params import PARAMETER_SETS, RlweParamError, RlweParams, get_params
from .sampler import (
    ByteSource,
    KnuthYaoSampler,
    SamplerError,
    StreamExhausted,
    discrete_gaussian_pmf,
    knuth_yao_sample,
)
from .scheme import (
    RlweCiphertext,
    RlweError,
    RlweKeyPair,
    deserialize_ciphertext,
    encode_message,
    keypair_from_polys,
    rlwe_decrypt,
    rlwe_enc2,
    rlwe_keygen,
    sampler_for,
    serialize_ciphertext,
    serialize_halves,
)
