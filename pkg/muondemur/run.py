from muondemur.core import MuonDemur


def run():
    MuonDemur().run()


if __name__ == "__main__":
    run()
