"""Published per-language training-corpus statistics (sentences, tokens, entities, ents/sentence, % density)."""

PUBLISHED_STATS = {
    "amh": (1750, 25829, 3995, 2.3, 15.5),
    "lug": (1428, 33003, 5039, 3.5, 15.3),
    "luo": (644, 18577, 2704, 4.2, 14.6),
    "en": (14042, 203621, 29450, 2.1, 14.5),
    "pcm": (2124, 52604, 7392, 3.5, 14.1),
    "kin": (2116, 47912, 6104, 2.9, 12.7),
    "swa": (2109, 56599, 7161, 3.4, 12.7),
    "hau": (1912, 55010, 6836, 3.6, 12.4),
    "ibo": (2235, 42719, 5294, 2.4, 12.4),
    "yor": (2171, 56274, 6324, 2.9, 11.2),
    "wol": (1871, 36805, 2157, 1.2, 5.9),
}
