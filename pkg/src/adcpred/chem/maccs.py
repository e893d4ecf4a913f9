"""166 structural keys evaluated as graph predicates.

Each key is a pattern plus a count threshold: the bit is set when the
number of distinct matched atom sets exceeds the threshold. Five keys
are not expressible as a single connected pattern and are computed
directly from the graph instead:

  1    isotope-labelled atom present
  2    atomic number above 103
  101  ring of size 8 or larger
  125  more than one aromatic ring
  166  more than one fragment

Patterns follow the published MDL key definitions (Q = hetero atom,
A = any heavy atom, X = halogen, $ = ring bond, % = aromatic bond).
Exact bit parity with other toolkits is not a goal; the vector is
deterministic and the per-key semantics are documented here.
"""

from __future__ import annotations

from .elements import ATOMIC_NUMBERS
from .fingerprints import Fingerprint, FingerprintKind
from .graph import MolecularGraph
from .smarts import compile_smarts

_Q = "[!#6;!#1]"
_QH = "[!#6;!#1;!H0]"

# key number -> (pattern, more_than). Bit set iff unique matches > more_than.
KEY_PATTERNS: dict[int, tuple[str, int]] = {
    3: ("[#32,#33,#34,#50,#51,#52,#82,#83,#84]", 0),
    4: ("[Ac,Th,Pa,U,Np,Pu,Am,Cm,Bk,Cf,Es,Fm,Md,No,Lr]", 0),
    5: ("[Sc,Ti,Y,Zr,Hf]", 0),
    6: ("[La,Ce,Pr,Nd,Pm,Sm,Eu,Gd,Tb,Dy,Ho,Er,Tm,Yb,Lu]", 0),
    7: ("[V,Cr,Mn,Nb,Mo,Tc,Ta,W,Re]", 0),
    8: (f"{_Q}1~*~*~*~1", 0),                       # QAAA@1
    9: ("[Fe,Co,Ni,Ru,Rh,Pd,Os,Ir,Pt]", 0),
    10: ("[Be,Mg,Ca,Sr,Ba,Ra]", 0),
    11: ("*1~*~*~*~1", 0),                          # 4-ring
    12: ("[Cu,Zn,Ag,Cd,Au,Hg]", 0),
    13: ("[#8]~[#7](~[#6])~[#6]", 0),               # ON(C)C
    14: ("[#16]-[#16]", 0),                         # S-S
    15: ("[#8]~[#6](~[#8])~[#8]", 0),               # OC(O)O
    16: (f"{_Q}1~*~*~1", 0),                        # QAA@1
    17: ("[#6]#[#6]", 0),                           # C#C
    18: ("[#5,#13,#31,#49,#81]", 0),                # group IIIA
    19: ("*1~*~*~*~*~*~*~1", 0),                    # 7-ring
    20: ("[#14]", 0),                               # Si
    21: (f"[#6]=[#6](~{_Q})~{_Q}", 0),              # C=C(Q)Q
    22: ("*1~*~*~1", 0),                            # 3-ring
    23: ("[#7]~[#6](~[#8])~[#8]", 0),               # NC(O)O
    24: ("[#7]-[#8]", 0),                           # N-O
    25: ("[#7]~[#6](~[#7])~[#7]", 0),               # NC(N)N
    26: ("[#6]=;@[#6](@*)@*", 0),                   # C$=C($A)$A
    27: ("[#53]", 0),                               # iodine
    28: (f"{_Q}~[CH2]~{_Q}", 0),                    # QCH2Q
    29: ("[#15]", 0),                               # phosphorus
    30: (f"[#6]~{_Q}(~[#6])(~[#6])~*", 0),          # CQ(C)(C)A
    31: (f"{_Q}~[F,Cl,Br,I]", 0),                   # QX
    32: ("[#6]~[#16]~[#7]", 0),                     # CSN
    33: ("[#7]~[#16]", 0),                          # NS
    34: ("[CH2]=*", 0),                             # CH2=A
    35: ("[Li,Na,K,Rb,Cs,Fr]", 0),                  # alkali metal
    36: ("[#16;R]", 0),                             # S heterocycle
    37: ("[#7]~[#6](~[#8])~[#7]", 0),               # NC(O)N
    38: ("[#7]~[#6](~[#6])~[#7]", 0),               # NC(C)N
    39: ("[#8]~[#16](~[#8])~[#8]", 0),              # OS(O)O
    40: ("[#16]-[#8]", 0),                          # S-O
    41: ("[#6]#[#7]", 0),                           # C#N
    42: ("[#9]", 0),                                # fluorine
    43: (f"{_QH}~*~{_QH}", 0),                      # QHAQH
    44: ("[!#1;!#6;!#7;!#8;!#16;!#15;!#9;!#17;!#35;!#53]", 0),  # other elements
    45: ("[#6]=[#6]~[#7]", 0),                      # C=CN
    46: ("[#35]", 0),                               # bromine
    47: ("[#16]~*~[#7]", 0),                        # SAN
    48: (f"[#8]~{_Q}(~[#8])~[#8]", 0),              # OQ(O)O
    49: ("[!+0]", 0),                               # charged atom
    50: ("[#6]=[#6](~[#6])~[#6]", 0),               # C=C(C)C
    51: ("[#6]~[#16]~[#8]", 0),                     # CSO
    52: ("[#7]~[#7]", 0),                           # NN
    53: (f"{_QH}~*~*~*~{_QH}", 0),                  # QHAAAQH
    54: (f"{_QH}~*~*~{_QH}", 0),                    # QHAAQH
    55: ("[#8]~[#16]~[#8]", 0),                     # OSO
    56: ("[#8]~[#7](~[#8])~[#6]", 0),               # ON(O)C
    57: ("[#8;R]", 0),                              # O heterocycle
    58: (f"{_Q}~[#16]~{_Q}", 0),                    # QSQ
    59: ("[#16]!:*:*", 0),                          # S not% A % A
    60: ("[#16]=[#8]", 0),                          # S=O
    61: ("*~[#16](~*)~*", 0),                       # AS(A)A
    62: ("*@*!@*@*", 0),                            # A$!A$A
    63: ("[#7]=[#8]", 0),                           # N=O
    64: ("*@*!@[#16]", 0),                          # A$A!S
    65: ("c:n", 0),                                 # C%N
    66: (f"[#6]~[#6](~[#6])(~[#6])~{_Q}", 0),       # CC(C)(C)A
    67: (f"{_Q}~[#16]", 0),                         # QS
    68: (f"{_QH}~{_QH}", 0),                        # QHQH
    69: (f"{_Q}~{_QH}", 0),                         # QQH
    70: (f"{_Q}~[#7]~{_Q}", 0),                     # QNQ
    71: ("[#7]~[#8]", 0),                           # NO
    72: ("[#8]~*~*~[#8]", 0),                       # OAAO
    73: ("[#16]=*", 0),                             # S=A
    74: ("[CH3]~*~[CH3]", 0),                       # CH3ACH3
    75: ("*!@[#7]@*", 0),                           # A!N$A
    76: ("[#6]=[#6](~*)~*", 0),                     # C=C(A)A
    77: ("[#7]~*~[#7]", 0),                         # NAN
    78: ("[#6]=[#7]", 0),                           # C=N
    79: ("[#7]~*~*~[#7]", 0),                       # NAAN
    80: ("[#7]~*~*~*~[#7]", 0),                     # NAAAN
    81: ("[#16]~*(~*)~*", 0),                       # SA(A)A
    82: (f"*~[CH2]~{_QH}", 0),                      # ACH2QH
    83: (f"{_Q}1~*~*~*~*~1", 0),                    # QAAAA@1
    84: ("[NH2]", 0),                               # NH2
    85: ("[#6]~[#7](~[#6])~[#6]", 0),               # CN(C)C
    86: (f"[C;H2,H3]{_Q}[C;H2,H3]", 0),             # CH2QCH2
    87: ("[F,Cl,Br,I]!@*@*", 0),                    # X!A$A
    88: ("[#16]", 0),                               # sulfur
    89: ("[#8]~*~*~*~[#8]", 0),                     # OAAAO
    90: (f"[$({_QH}~*~*~[CH2]~*),"
         f"$([!#6;!#1;!H0;R]1@[R]@[R]@[CH2;R]1),"
         f"$({_QH}~[R]1@[R]@[CH2;R]1)]", 0),        # QHAACH2A
    91: (f"[$({_QH}~*~*~*~[CH2]~*),"
         f"$([!#6;!#1;!H0;R]1@[R]@[R]@[R]@[CH2;R]1),"
         f"$({_QH}~[R]1@[R]@[R]@[CH2;R]1),"
         f"$({_QH}~*~[R]1@[R]@[CH2;R]1)]", 0),      # QHAAACH2A
    92: ("[#8]~[#6](~[#7])~[#6]", 0),               # OC(N)C
    93: (f"{_Q}~[CH3]", 0),                         # QCH3
    94: (f"{_Q}~[#7]", 0),                          # QN
    95: ("[#7]~*~*~[#8]", 0),                       # NAAO
    96: ("*1~*~*~*~*~1", 0),                        # 5-ring
    97: ("[#7]~*~*~*~[#8]", 0),                     # NAAAO
    98: (f"{_Q}1~*~*~*~*~*~1", 0),                  # QAAAAA@1
    99: ("[#6]=[#6]", 0),                           # C=C
    100: ("*~[CH2]~[#7]", 0),                       # ACH2N
    102: (f"{_Q}~[#8]", 0),                         # QO
    103: ("[#17]", 0),                              # chlorine
    104: (f"{_QH}~*~[CH2]~*", 0),                   # QHACH2A
    105: ("*@*(@*)@*", 0),                          # A$A($A)$A
    106: (f"{_Q}~*(~{_Q})~{_Q}", 0),                # QA(Q)Q
    107: ("[F,Cl,Br,I]~*(~*)~*", 0),                # XA(A)A
    108: ("[CH3]~*~*~*~[CH2]~*", 0),                # CH3AAACH2A
    109: ("*~[CH2]~[#8]", 0),                       # ACH2O
    110: ("[#7]~[#6]~[#8]", 0),                     # NCO
    111: ("[#7]~*~[CH2]~*", 0),                     # NACH2A
    112: ("*~*(~*)(~*)~*", 0),                      # AA(A)(A)A
    113: ("[#8]!:*:*", 0),                          # O not% A % A
    114: ("[CH3]~[CH2]~*", 0),                      # CH3CH2A
    115: ("[CH3]~*~[CH2]~*", 0),                    # CH3ACH2A
    116: ("[$([CH3]~*~*~[CH2]~*),"
          "$([CH3]~*1~*~[CH2]1)]", 0),              # CH3AACH2A
    117: ("[#7]~*~[#8]", 0),                        # NAO
    118: ("[$(*~[CH2]~[CH2]~*),"
          "$([R]1@[CH2;R]@[CH2;R]1)]", 1),          # ACH2CH2A > 1
    119: ("[#7]=*", 0),                             # N=A
    120: ("[!#6;R]", 1),                            # heterocyclic atom > 1
    121: ("[#7;R]", 0),                             # N heterocycle
    122: ("*~[#7](~*)~*", 0),                       # AN(A)A
    123: ("[#8]~[#6]~[#8]", 0),                     # OCO
    124: (f"{_Q}~{_Q}", 0),                         # QQ
    126: ("*!@[#8]!@*", 0),                         # A!O!A
    127: ("*@*!@[#8]", 1),                          # A$A!O > 1
    128: ("[$(*~[CH2]~*~*~*~[CH2]~*),"
          "$([R]1@[CH2;R]@[R]@[R]@[R]@[CH2;R]1),"
          "$(*~[CH2]~[R]1@[R]@[R]@[CH2;R]1),"
          "$(*~[CH2]~*~[R]1@[R]@[CH2;R]1)]", 0),    # ACH2AAACH2A
    129: ("[$(*~[CH2]~*~*~[CH2]~*),"
          "$([R]1@[CH2;R]@[R]@[R]@[CH2;R]1),"
          "$(*~[CH2]~[R]1@[R]@[CH2;R]1)]", 0),      # ACH2AACH2A
    130: (f"{_Q}~{_Q}", 1),                         # QQ > 1
    131: (_QH, 1),                                  # QH > 1
    132: ("[#8]~*~[CH2]~*", 0),                     # OACH2A
    133: ("*@*!@[#7]", 0),                          # A$A!N
    134: ("[F,Cl,Br,I]", 0),                        # halogen
    135: ("[#7]!:*:*", 0),                          # N not% A % A
    136: ("[#8]=*", 1),                             # O=A > 1
    137: ("[!#6;R]", 0),                            # heterocycle
    138: (f"{_Q}~[CH2]~*", 1),                      # QCH2A > 1
    139: ("[#8;!H0]", 0),                           # OH
    140: ("[#8]", 3),                               # O > 3
    141: ("[CH3]", 2),                              # CH3 > 2
    142: ("[#7]", 1),                               # N > 1
    143: ("*@*!@[#8]", 0),                          # A$A!O
    144: ("*!:*:*!:*", 0),                          # A not% A % A not% A
    145: ("*1~*~*~*~*~*~1", 1),                     # 6-ring > 1
    146: ("[#8]", 2),                               # O > 2
    147: ("[$(*~[CH2]~[CH2]~*),"
          "$([R]1@[CH2;R]@[CH2;R]1)]", 0),          # ACH2CH2A
    148: (f"*~{_Q}(~*)~*", 0),                      # AQ(A)A
    149: ("[C;H3,H4]", 1),                          # CH3 > 1
    150: ("*!@*@*!@*", 0),                          # A!A$A!A
    151: ("[#7;!H0]", 0),                           # NH
    152: ("[#8]~[#6](~[#6])~[#6]", 0),              # OC(C)C
    153: (f"{_Q}~[CH2]~*", 0),                      # QCH2A
    154: ("[#6]=[#8]", 0),                          # C=O
    155: ("*!@[CH2]!@*", 0),                        # A!CH2!A
    156: ("[#7]~*(~*)~*", 0),                       # NA(A)A
    157: ("[#6]-[#8]", 0),                          # C-O
    158: ("[#6]-[#7]", 0),                          # C-N
    159: ("[#8]", 1),                               # O > 1
    160: ("[C;H3,H4]", 0),                          # CH3
    161: ("[#7]", 0),                               # N
    162: ("a", 0),                                  # aromatic atom
    163: ("*1~*~*~*~*~*~1", 0),                     # 6-ring
    164: ("[#8]", 0),                               # O
    165: ("[R]", 0),                                # ring atom
}


def _key_isotope(g: MolecularGraph) -> bool:
    return any(a.isotope is not None for a in g.atoms)


def _key_heavy_element(g: MolecularGraph) -> bool:
    return any(ATOMIC_NUMBERS.get(a.element, 0) > 103 for a in g.atoms)


def _key_large_ring(g: MolecularGraph) -> bool:
    return any(len(ring) >= 8 for ring in g.rings)


def _key_multi_aromatic(g: MolecularGraph) -> bool:
    return g.aromatic_ring_count() > 1


def _key_fragments(g: MolecularGraph) -> bool:
    return len(g.components()) > 1


KEY_HOOKS = {
    1: _key_isotope,
    2: _key_heavy_element,
    101: _key_large_ring,
    125: _key_multi_aromatic,
    166: _key_fragments,
}


def maccs_fingerprint(g: MolecularGraph) -> Fingerprint:
    """166-bit structural-key vector; bit i-1 corresponds to key i."""
    bits = 0
    for key, hook in KEY_HOOKS.items():
        if hook(g):
            bits |= 1 << (key - 1)
    for key, (pattern, more_than) in KEY_PATTERNS.items():
        compiled = compile_smarts(pattern)
        if compiled.count_unique(g, more_than=more_than) > more_than:
            bits |= 1 << (key - 1)
    return Fingerprint(kind=FingerprintKind.MACCS166, bits=bits)
