from rssiloc.cli import main

main()
