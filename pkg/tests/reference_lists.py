"""Published (3,2,2) variable-set lists, in the short repair naming U<i>[<j>].

Kept as plain strings so the tests parse them with the same name parser the
CLI uses.
"""

MAXIMAL_IRREDUCIBLE = [
    "S", "Y1,Y2", "Y1,Y3", "Y2,Y3", "Y1,U2[3]", "Y1,U3[2]",
    "Y2,U1[3]", "Y2,U3[1]", "Y3,U1[2]", "Y3,U2[1]",
    "U2[1],U3[1],U2[3]", "U2[1],U3[1],U3[2]",
    "U1[2],U3[2],U1[3]", "U1[2],U3[2],U3[1]",
    "U1[3],U2[3],U1[2]", "U1[3],U2[3],U2[1]",
]

FURTHER_IRREDUCIBLE = [
    "Y1,U2[1]", "Y1,U3[1]", "Y2,U1[2]", "Y2,U3[2]",
    "Y3,U1[3]", "Y3,U2[3]", "U1[2],U2[3],U3[1]", "U1[3],U2[1],U3[2]",
]

DIMENSIONS = [
    "S", "Y1", "Y2", "Y3", "U2[3]", "U3[2]", "U1[3]", "U3[1]",
    "U1[2]", "U2[1]", "U2[1],U3[1]", "U2[1],U2[3]", "U3[1],U2[3]",
    "U2[1],U3[2]", "U3[1],U3[2]", "U1[2],U3[2]", "U1[2],U1[3]",
    "U3[2],U1[3]", "U1[2],U3[1]", "U1[3],U2[3]", "U2[3],U1[2]",
    "U1[3],U2[1]", "Y1,U2[1]", "Y1,U3[1]", "Y2,U1[2]",
    "Y2,U3[2]", "Y3,U1[3]", "Y3,U2[3]", "U1[2],U2[3],U3[1]",
    "U1[3],U2[1],U3[2]",
]

REPRESENTATIVES = [
    "S", "Y1", "U1[2]", "U1[2],U3[2]", "U1[2],U1[3]",
    "U1[2],U3[1]", "U1[2],U2[3]", "Y1,U2[1]", "U1[2],U2[3],U3[1]",
]


def masks(universe, sets):
    from dssbound.entset import parse_varset
    return [parse_varset(universe, s) for s in sets]
