from app.cli.routes import cli


def main() -> None:
    """Console entry point (installed as ``loadid``)"""
    cli()


if __name__ == "__main__":
    main()
