from pnlsep.main import main

main()
