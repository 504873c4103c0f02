#!/usr/bin/env python3
"""Generates the bundled topical test corpus and the matching topic pool.

    python3 tools/make_test_corpus.py [--out data] [--seed 509] [--bytes 1050000]

Writes:
  <out>/topical_corpus.txt   one document per line (~1 MB)
  <out>/topics.tsv           <topic>\t<query> lines for the simulator

Each document is written around one topic (a few mix in a second one):
topic vocabulary interleaved with shared function words, so that words of
the same topic share co-occurrence contexts and words of different topics
mostly do not. Output depends only on the seed.
"""

import argparse
import os
import random

TOPICS = {
    "baseball": "baseball pitcher inning homerun dugout shortstop bullpen umpire catcher outfield "
                "redsox yankees fenway batting strikeout slugger pennant mound scoreboard bleachers "
                "doubleheader infield",
    "cooking": "recipe bake oven flour dough simmer saucepan garlic onion skillet roast marinade "
               "oregano basil casserole pastry whisk butter braise broth knead yeast",
    "astronomy": "telescope galaxy nebula planet orbit comet asteroid supernova constellation eclipse "
                 "lunar quasar pulsar observatory meteor jupiter saturn spacecraft astronaut cosmos "
                 "lightyear stargazing",
    "gardening": "garden compost mulch seedling tomato pruning trellis perennial fertilizer soil "
                 "greenhouse weeding hoe rake tulip bulbs hydrangea irrigation shrub hedge topsoil "
                 "planter",
    "investing": "stock dividend portfolio bonds equity nasdaq broker etf shares investor valuation "
                 "earnings bull bear brokerage retirement ira annuity mutualfund yield dowjones "
                 "securities capitalgains",
    "weather": "forecast rain snowstorm humidity thunderstorm hurricane tornado blizzard drizzle "
               "meteorologist barometer temperature celsius fahrenheit windchill heatwave frost "
               "precipitation cloudy sunny doppler radar",
    "guitar": "guitar chords fretboard strumming acoustic amplifier pickup capo tablature riff solo "
              "strings tuning fender gibson distortion pedal bassist arpeggio fingerpicking "
              "headstock luthier",
    "diabetes": "diabetes insulin glucose pancreas carbohydrate hypoglycemia endocrinologist a1c "
                "metformin glycemic prediabetes neuropathy glucometer ketones dialysis "
                "hyperglycemia pump retinopathy lancet dietitian obesity triglycerides",
    "programming": "compiler python javascript debugger syntax variable function recursion algorithm "
                   "github repository stackoverflow runtime bytecode linux kernel terminal shell "
                   "segfault pointer refactoring unittest",
    "travel_europe": "paris rome eurail hostel louvre colosseum venice gondola passport itinerary "
                     "backpacking amsterdam barcelona prague vienna cathedral piazza schengen "
                     "airbnb ryanair sightseeing florence",
    "dogs": "puppy labrador retriever beagle kennel leash obedience vet groomer terrier poodle "
            "dachshund chihuahua bulldog fetch kibble rabies heartworm shelter adoption breeder "
            "collar",
    "cars": "sedan horsepower transmission mileage dealership hybrid toyota honda ford engine "
            "brakes tires suspension carburetor torque coupe hatchback minivan odometer "
            "windshield alternator radiator",
    "wedding": "wedding bride groom bridesmaid tuxedo veil bouquet reception caterer officiant "
               "honeymoon engagement vows gown florist invitations registry rehearsal "
               "photographer chapel fiance bridal",
    "fitness": "workout treadmill dumbbell squats pushups cardio bodybuilding protein gym crossfit "
               "kettlebell deadlift biceps triceps abs stretching calories trainer marathon "
               "sprint endurance pilates",
    "real_estate": "mortgage realtor foreclosure condo appraisal escrow downpayment refinance "
                   "landlord tenant lease townhouse closing listing homeowner zillow "
                   "property inspection duplex rental bungalow amortization",
    "chess": "chess checkmate gambit bishop knight rook pawn castling stalemate grandmaster "
             "endgame opening sicilian kasparov fischer carlsen blitz tournament fide elo "
             "queenside kingside",
    "photography": "camera lens aperture shutter tripod exposure megapixel dslr nikon canon "
                   "autofocus zoom lightroom photoshop bokeh iso viewfinder flash portrait "
                   "landscape panorama telephoto",
    "elections": "election ballot candidate senator congress primary caucus electoral campaign "
                 "voter polling democrat republican incumbent debate governor senate "
                 "referendum precinct absentee nominee inauguration",
    "earthquake": "earthquake tsunami magnitude seismic richter aftershock epicenter fault "
                  "tectonic fukushima evacuation quake rubble seismograph tremor rescuers "
                  "reactor meltdown radiation sendai debris casualties",
    "wine": "wine merlot cabernet chardonnay vineyard sommelier tannins vintage pinot sauvignon "
            "riesling napa bordeaux decanter cork winery grapes rose zinfandel malbec "
            "prosecco tasting",
    "coffee": "coffee espresso latte cappuccino barista arabica roast grinder mocha starbucks "
              "decaf frappuccino caffeine beans brew percolator french press macchiato "
              "americano filter kona",
    "movies": "movie oscar director screenplay actress actor boxoffice sequel trailer premiere "
              "cinema hollywood blockbuster imdb documentary animation pixar dreamworks "
              "soundtrack cinematography spielberg",
    "soccer": "soccer striker goalkeeper midfielder penalty offside fifa worldcup premierleague "
              "manchester barcelonafc messi ronaldo dribble corner freekick referee hattrick "
              "chelsea arsenal liverpool",
    "knitting": "knitting yarn needles crochet stitch purl skein wool cardigan scarf mittens "
                "pattern cable ravelry alpaca merino afghan gauge knit bobbin tapestry "
                "embroidery",
    "pregnancy": "pregnancy trimester ultrasound obstetrician prenatal contractions labor "
                 "epidural newborn midwife breastfeeding stroller crib diapers nursery doula "
                 "gestational folic ovulation fertility postpartum",
    "history_rome": "caesar augustus senate legion gladiator emperor republic carthage hannibal "
                    "pompeii vesuvius aqueduct forum praetorian centurion nero caligula "
                    "spartacus tribune consul rubicon",
    "smartphones": "iphone android smartphone touchscreen ipad app samsung galaxys blackberry "
                   "motorola verizon sprint tmobile unlocked firmware jailbreak bluetooth "
                   "charger battery ringtone texting",
    "fishing": "fishing trout bass angler lure bait reel rod fly tackle salmon catfish walleye "
               "pike casting spinner bobber hook creek marlin trolling fishery",
    "taxes": "tax irs deduction refund withholding audit accountant w2 1099 filing exemption "
             "itemized turbotax hrblock deadline payroll dependent taxable bracket extension "
             "estimated",
    "climbing": "climbing bouldering carabiner belay harness crampons rappel summit everest "
                "sherpa altitude glacier ropes quickdraw chalk crag ascent mountaineering "
                "ice axe basecamp",
    "jazz": "jazz saxophone trumpet improvisation bebop coltrane miles davis ellington swing "
            "bigband trombone clarinet monk mingus parker blues scat syncopation combo "
            "standards ragtime",
    "nutrition": "vitamins minerals antioxidants fiber cholesterol omega sodium vegan "
                 "gluten organic probiotics supplements iron calcium zinc magnesium keto "
                 "paleo macronutrients superfood quinoa",
    "video_games": "xbox playstation nintendo wii console gamer multiplayer halo zelda mario "
                   "callofduty warcraft minecraft controller joystick arcade rpg dlc "
                   "speedrun cheats walkthrough",
    "birds": "birdwatching warbler sparrow hawk owl heron robin cardinal finch binoculars "
             "migration audubon nest feeder hummingbird woodpecker eagle plumage birdsong "
             "ornithology falcon",
    "home_repair": "plumbing faucet drywall caulk grout plywood wrench screwdriver hammer "
                   "electrician wiring insulation roofing shingles gutter leak plumber "
                   "contractor renovation sandpaper",
    "olympics": "olympics medalist gold silver bronze athlete sprinter gymnastics swimming "
                "relay torch podium decathlon biathlon luge bobsled skating slalom "
                "paralympics stadium vancouver",
    "hiking": "hiking trailhead backpack campsite tent sleepingbag compass switchback "
              "wilderness appalachian ranger canteen trekking boots blisters moose bear "
              "yellowstone yosemite lantern firewood",
    "cats": "kitten litter tabby siamese persian catnip scratching meow feline purring "
            "hairball declaw spay neuter whiskers siberian maine coon kitty calico tomcat",
    "banking": "checking savings overdraft atm debit creditcard interest apr loan teller "
               "routing wire deposit statement fdic credit score bankruptcy lender paypal "
               "fraud",
    "opera": "opera soprano tenor aria libretto verdi puccini wagner mozart baritone "
             "mezzo orchestra conductor overture carmen traviata boheme diva encore "
             "metropolitan",
}

FUNCTION_WORDS = (
    "the of and a to in is for on with that by this it was as at from are be has an have or "
    "new more about one which their also people time year first many some can will after "
    "its been other were when there who they all would his her but not what so up out if "
    "into than only over most just like could these then two well may any such where each "
    "very our because much should how best cheap near me review free online buy guide tips "
    "news schedule price 2011 today local top how to"
).split()

QUERY_FILLERS = "best cheap how to near me review free online buy guide tips news schedule price 2011 top".split()


def zipf_weights(n):
    return [1.0 / (i + 1) ** 0.6 for i in range(n)]


def make_document(rng, vocab, weights, second=None):
    length = rng.randint(60, 120)
    words = []
    for _ in range(length):
        r = rng.random()
        if r < 0.55:
            words.append(rng.choices(vocab, weights)[0])
        elif second is not None and r < 0.65:
            words.append(rng.choice(second))
        else:
            words.append(rng.choice(FUNCTION_WORDS))
    # Sentence-case a few words and add punctuation so tokenization matters.
    out = []
    for i, w in enumerate(words):
        if i == 0 or rng.random() < 0.05:
            w = w.capitalize()
        out.append(w)
        if rng.random() < 0.08:
            out[-1] += rng.choice([",", ".", ";"])
    return " ".join(out) + "."


def make_queries(rng, vocab, count=14):
    queries = []
    seen = set()
    while len(queries) < count:
        n = rng.choice([2, 3, 3, 4])
        words = rng.sample(vocab, n if rng.random() < 0.7 else n - 1)
        if rng.random() < 0.3:
            words.insert(rng.randrange(len(words) + 1), rng.choice(QUERY_FILLERS))
        if len(words) < 2:
            continue
        q = " ".join(words)
        key = frozenset(words)
        if key in seen:
            continue
        seen.add(key)
        queries.append(q)
    return queries


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data"))
    ap.add_argument("--seed", type=int, default=509)
    ap.add_argument("--bytes", type=int, default=1_050_000)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    names = list(TOPICS)
    vocabs = {t: TOPICS[t].split() for t in names}

    os.makedirs(args.out, exist_ok=True)
    docs = []
    size = 0
    while size < args.bytes:
        t = names[len(docs) % len(names)]
        vocab = list(vocabs[t])
        rng.shuffle(vocab)
        second = None
        if rng.random() < 0.1:
            other = rng.choice([n for n in names if n != t])
            second = vocabs[other]
        doc = make_document(rng, vocab, zipf_weights(len(vocab)), second)
        docs.append(doc)
        size += len(doc) + 1
    rng.shuffle(docs)
    with open(os.path.join(args.out, "topical_corpus.txt"), "w") as f:
        f.write("\n".join(docs) + "\n")

    with open(os.path.join(args.out, "topics.tsv"), "w") as f:
        f.write("# topic<TAB>query; generated by tools/make_test_corpus.py\n")
        for t in names:
            for q in make_queries(rng, vocabs[t]):
                f.write(f"{t}\t{q}\n")


if __name__ == "__main__":
    main()
